"""Configuration-model networks and component analysis."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._kernels import build_csr, pair_half_links
from .degree_model import ParameterError

__all__ = [
    "Network",
    "ComponentLabeling",
    "build_configuration_model",
    "components",
    "degree_histogram",
    "write_edge_list",
    "read_edge_list",
]

# Consecutive rejected draws before the leftover half-links are searched
# exhaustively for an admissible pair.
MAX_FAILURES = 100
# Fresh pairing attempts when half-links are left over; the attempt with the
# fewest leftovers is kept.
MAX_RESTARTS = 20


@dataclass(frozen=True, eq=False)
class Network:
    """Simple undirected graph in compressed adjacency form.

    ``indices[indptr[v]:indptr[v + 1]]`` are the neighbours of ``v``, sorted.
    ``degree_sequence`` is the requested sequence, ``target_degrees`` the
    sequence after the odd-sum repair and ``discarded`` the number of
    half-links left unpaired.
    """

    indptr: np.ndarray
    indices: np.ndarray
    degree_sequence: np.ndarray
    target_degrees: np.ndarray
    discarded: int = 0

    @classmethod
    def from_edges(cls, n, edges, degree_sequence=None, target_degrees=None,
                   discarded=0):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        indptr, indices = build_csr(n, np.ascontiguousarray(edges[:, 0]),
                                    np.ascontiguousarray(edges[:, 1]))
        deg = np.diff(indptr)
        if degree_sequence is None:
            degree_sequence = deg
        if target_degrees is None:
            target_degrees = np.asarray(degree_sequence)
        for a in (indptr, indices):
            a.flags.writeable = False
        return cls(indptr, indices, np.asarray(degree_sequence, dtype=np.int64),
                   np.asarray(target_degrees, dtype=np.int64), int(discarded))

    @property
    def n(self):
        return self.indptr.size - 1

    @property
    def degrees(self):
        """Realized degrees."""
        return np.diff(self.indptr)

    @property
    def edge_count(self):
        return self.indices.size // 2

    def neighbors(self, v):
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def adjacency(self):
        return [self.neighbors(v).tolist() for v in range(self.n)]

    def edges(self):
        """``(m, 2)`` array of edges with ``u < v``."""
        src = np.repeat(np.arange(self.n), self.degrees)
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])


@dataclass(frozen=True)
class ComponentLabeling:
    component_id: np.ndarray
    component_sizes: list

    @property
    def giant_size(self):
        return self.component_sizes[0] if self.component_sizes else 0


def build_configuration_model(degree_seq, rng, max_failures=MAX_FAILURES,
                              max_restarts=MAX_RESTARTS):
    """Pair half-links uniformly at random into a simple graph.

    If the degree sum is odd, one uniformly chosen node of positive degree
    loses a half-link first.  Pairings that would create a self-loop or a
    parallel edge are redrawn.  When no admissible pair remains, the whole
    pairing is redone, up to ``max_restarts`` times; if half-links are still
    left over, the attempt with the fewest is kept and its leftovers are
    discarded and counted in ``Network.discarded``.
    """
    seq = np.asarray(degree_seq, dtype=np.int64)
    if seq.ndim != 1 or seq.size == 0:
        raise ParameterError("degree sequence must be a non-empty 1-d sequence")
    if np.any(seq < 0):
        raise ParameterError("degrees must be non-negative")
    n = seq.size
    target = seq.copy()
    if target.sum() % 2:
        candidates = np.flatnonzero(target > 0)
        target[candidates[rng.integers(candidates.size)]] -= 1
    stubs = np.repeat(np.arange(n, dtype=np.int64), target)
    u, v, discarded = pair_half_links(stubs, n, rng, max_failures)
    for _ in range(max_restarts):
        if discarded == 0:
            break
        cand = pair_half_links(stubs, n, rng, max_failures)
        if cand[2] < discarded:
            u, v, discarded = cand
    return Network.from_edges(n, np.column_stack([u, v]), seq, target, discarded)


def components(net):
    """Connected components; ids are ordered by decreasing size."""
    n = net.n
    data = np.ones(net.indices.size, dtype=np.int8)
    graph = csr_matrix((data, net.indices, net.indptr), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    sizes = np.bincount(labels)
    # stable rank: larger first, ties by first appearance
    rank = np.empty_like(sizes)
    rank[np.argsort(-sizes, kind="stable")] = np.arange(sizes.size)
    return ComponentLabeling(rank[labels], sorted(sizes.tolist(), reverse=True))


def degree_histogram(net, node_filter=None):
    """Normalized histogram ``{k: fraction}`` of realized degrees.

    ``node_filter`` may be a predicate on node ids, a boolean mask or an
    index array.
    """
    deg = net.degrees
    if node_filter is None:
        sel = deg
    elif callable(node_filter):
        sel = deg[[v for v in range(net.n) if node_filter(v)]]
    else:
        sel = deg[np.asarray(node_filter)]
    if sel.size == 0:
        raise ValueError("empty node selection; cannot normalize")
    counts = np.bincount(sel)
    return {int(k): c / sel.size for k, c in enumerate(counts) if c}


def write_edge_list(path, net, seed=None):
    lines = [f"# n={net.n} seed={seed}"]
    lines += [f"{u} {v}" for u, v in net.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path):
    n = None
    edges = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            for tok in line[1:].split():
                if tok.startswith("n="):
                    n = int(tok[2:])
            continue
        if line.strip():
            u, v = line.split()
            edges.append((int(u), int(v)))
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return Network.from_edges(n, edges)
