"""Compiled inner loops: half-link pairing and event-queue propagation."""

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def _slot(table, key, mask):
    # linear probing; returns the slot holding key or the first empty one
    h = (np.uint64(key) * np.uint64(0x9E3779B97F4A7C15)) >> np.uint64(20)
    j = np.int64(h & np.uint64(mask))
    while table[j] != -1 and table[j] != key:
        j = (j + 1) & mask
    return j


@njit(nogil=True, cache=True)
def _absent(table, key, mask):
    return table[_slot(table, key, mask)] != key


@njit(nogil=True, cache=True)
def pair_half_links(stubs, n, rng, max_failures):
    """Pair half-links uniformly at random into a simple graph.

    ``stubs`` holds one node id per half-link.  Draws that would create a
    self-loop or a parallel edge are rejected.  After ``max_failures``
    consecutive rejections the remaining half-links are searched
    exhaustively; if no admissible pair is left they are discarded.

    Returns ``(u, v, discarded)``.
    """
    stubs = stubs.copy()
    m = stubs.size
    eu = np.empty(m // 2, np.int64)
    ev = np.empty(m // 2, np.int64)
    ne = 0
    cap = 16
    while cap < 2 * m:
        cap *= 2
    seen = np.full(cap, -1, np.int64)
    mask = cap - 1
    fails = 0
    while m >= 2:
        a = rng.integers(0, m)
        b = rng.integers(0, m - 1)
        if b >= a:
            b += 1
        u = stubs[a]
        v = stubs[b]
        ok = u != v
        if ok:
            key = min(u, v) * n + max(u, v)
            ok = seen[_slot(seen, key, mask)] != key
        if not ok:
            fails += 1
            if fails < max_failures:
                continue
            # exhaustive check for any admissible pair among what is left
            count = 0
            for x in range(m):
                for y in range(x + 1, m):
                    p, q = stubs[x], stubs[y]
                    if p != q and _absent(seen, min(p, q) * n + max(p, q), mask):
                        count += 1
            if count == 0:
                break
            r = rng.integers(0, count)
            found = False
            for x in range(m):
                for y in range(x + 1, m):
                    p, q = stubs[x], stubs[y]
                    if p != q and _absent(seen, min(p, q) * n + max(p, q), mask):
                        if r == 0:
                            a, b = x, y
                            found = True
                            break
                        r -= 1
                if found:
                    break
            u = stubs[a]
            v = stubs[b]
            key = min(u, v) * n + max(u, v)
        seen[_slot(seen, key, mask)] = key
        eu[ne] = u
        ev[ne] = v
        ne += 1
        hi = max(a, b)
        lo = min(a, b)
        stubs[hi] = stubs[m - 1]
        m -= 1
        stubs[lo] = stubs[m - 1]
        m -= 1
        fails = 0
    return eu[:ne], ev[:ne], m


@njit(nogil=True, cache=True)
def _push(ht, hv, size, t, v):
    j = size
    while j > 0:
        parent = (j - 1) >> 1
        if ht[parent] <= t:
            break
        ht[j] = ht[parent]
        hv[j] = hv[parent]
        j = parent
    ht[j] = t
    hv[j] = v
    return size + 1


@njit(nogil=True, cache=True)
def _pop(ht, hv, size):
    t0 = ht[0]
    v0 = hv[0]
    size -= 1
    t = ht[size]
    v = hv[size]
    j = 0
    while True:
        c = 2 * j + 1
        if c >= size:
            break
        if c + 1 < size and ht[c + 1] < ht[c]:
            c += 1
        if ht[c] >= t:
            break
        ht[j] = ht[c]
        hv[j] = hv[c]
        j = c
    if size > 0:
        ht[j] = t
        hv[j] = v
    return t0, v0, size


@njit(nogil=True, cache=True)
def propagate(indptr, indices, source, delays, trace):
    """Run one propagation from ``source``.

    ``delays[e]`` is the sending delay along CSR slot ``e``, used when the
    slot's owner becomes informed.  Returns reception times (``nan`` when
    never reached), the infection order, the informed count, the traces
    ``(k_ext, k_recv, k_recv_inf)``, the number of scheduled and popped
    events, and whether popped times were non-decreasing.
    """
    n = indptr.size - 1
    recv = np.full(n, np.nan)
    order = np.empty(n, np.int64)
    informed = np.zeros(n, np.bool_)
    cap = indices.size + 1
    ht = np.empty(cap)
    hv = np.empty(cap, np.int64)
    size = 0
    tn = n if trace else 0
    kext = np.zeros(tn, np.int64)
    krecv = np.zeros(tn, np.int64)
    krecv_inf = np.zeros(tn, np.int64)
    inf_nb = np.zeros(tn, np.int64)
    ext = 0
    pushed = 0
    popped = 0
    monotone = True
    last = 0.0

    count = 0
    v = source
    t = 0.0
    while True:
        # inform v at time t
        informed[v] = True
        recv[v] = t
        order[count] = v
        if trace:
            krecv[count] = indptr[v + 1] - indptr[v]
            krecv_inf[count] = inf_nb[v]
            ext -= inf_nb[v]
        for e in range(indptr[v], indptr[v + 1]):
            w = indices[e]
            if trace and not informed[w]:
                inf_nb[w] += 1
                ext += 1
            size = _push(ht, hv, size, t + delays[e], w)
            pushed += 1
        if trace:
            kext[count] = ext
        count += 1
        # next reception
        found = False
        while size > 0:
            t, v, size = _pop(ht, hv, size)
            popped += 1
            if t < last:
                monotone = False
            last = t
            if not informed[v]:
                found = True
                break
        if not found:
            break
    return (recv, order[:count], count, kext[:count], krecv[:count],
            krecv_inf[:count], pushed, popped, monotone)


@njit(nogil=True, cache=True)
def build_csr(n, eu, ev):
    """Symmetric adjacency in CSR form with sorted neighbour lists."""
    indptr = np.zeros(n + 1, np.int64)
    for j in range(eu.size):
        indptr[eu[j] + 1] += 1
        indptr[ev[j] + 1] += 1
    for v in range(n):
        indptr[v + 1] += indptr[v]
    fill = indptr[:-1].copy()
    indices = np.empty(2 * eu.size, np.int64)
    for j in range(eu.size):
        a, b = eu[j], ev[j]
        indices[fill[a]] = b
        fill[a] += 1
        indices[fill[b]] = a
        fill[b] += 1
    for v in range(n):
        indices[indptr[v]:indptr[v + 1]].sort()
    return indptr, indices
