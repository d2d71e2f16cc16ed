"""Expectation-level propagation equations and their numerical solution.

The state is advanced in the number of informed nodes ``i`` rather than in
time.  It consists of the degree pmf of the uninformed nodes, the expected
number of external (informed--uninformed) edges and the expected elapsed time.
The uninformed degree sum is derived as ``(n - i) * E[k_ninf]``, never
integrated separately.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .degree_model import DegreeDistribution, molloy_reed_ok

__all__ = [
    "DegenerateInputError",
    "DomainError",
    "StepSizeError",
    "PropagationInterrupted",
    "TheoryCurve",
    "solver_grid",
    "receiver_distribution",
    "expected_krecv_inf",
    "dninf_di",
    "dkext_di",
    "dt_di",
    "informed_distribution",
    "discrete_step",
    "solve",
    "DEFAULT_STEPS_PER_SECTION",
]

logger = logging.getLogger(__name__)

DEFAULT_STEPS_PER_SECTION = 5000

# Per-step tolerances; anything beyond them means the grid is too coarse.
NEGATIVE_TOL = 1e-6
DRIFT_TOL = 1e-6


class DegenerateInputError(ValueError):
    """Input pmf or state has no usable mass."""


class DomainError(ValueError):
    """Argument outside the domain where the equations are defined."""


class StepSizeError(RuntimeError):
    """A solver step left the admissible region; use more steps per section."""


class PropagationInterrupted(RuntimeError):
    """The expected number of external edges dropped to zero."""


def _mean(p, k):
    return float(np.dot(p, k))


def receiver_distribution(p_ninf, degrees):
    """Size-biased pmf of the next receiver, ``k * p(k) / E[k]``."""
    p_ninf = np.asarray(p_ninf, dtype=float)
    k = np.asarray(degrees, dtype=float)
    mean = _mean(p_ninf, k)
    if mean <= 0:
        raise DegenerateInputError("uninformed nodes have zero mean degree")
    return k * p_ninf / mean


def expected_krecv_inf(e_krecv, e_k_ext, e_k_tot_ni):
    """Expected number of receiver edges leading back to informed nodes.

    First-order expansion of the size-biased binomial mean: one edge is the
    one the message arrived on, the other ``k_recv - 1`` hit informed half
    links with probability ``K_ext / (K_ext + K_tot_ni)``.
    """
    denom = e_k_ext + e_k_tot_ni
    if denom <= 0:
        raise DegenerateInputError("K_ext + K_tot_ni must be positive")
    return 1.0 + (e_krecv - 1.0) * e_k_ext / denom


def dninf_di(p_ninf, degrees, i, n):
    """Derivative of the uninformed degree pmf with respect to ``i``.

    ``dP(k)/di = P(k) / (n - i) * (1 - k / E[k_ninf])``; sums to zero.
    """
    if i >= n - 1:
        raise DomainError(f"i must be < n - 1 (i={i}, n={n})")
    p_ninf = np.asarray(p_ninf, dtype=float)
    k = np.asarray(degrees, dtype=float)
    mean = _mean(p_ninf, k)
    if mean <= 0:
        raise DegenerateInputError("uninformed nodes have zero mean degree")
    return p_ninf / (n - i) * (1.0 - k / mean)


def dkext_di(p_ninf, degrees, e_k_ext, i, n):
    """Expected change of the external edge count per newly informed node."""
    p_ninf = np.asarray(p_ninf, dtype=float)
    k = np.asarray(degrees, dtype=float)
    mean = _mean(p_ninf, k)
    if mean <= 0:
        raise DegenerateInputError("uninformed nodes have zero mean degree")
    e_krecv = float(np.dot(k * k, p_ninf)) / mean
    e_k_tot_ni = (n - i) * mean
    return e_krecv - 2.0 * expected_krecv_inf(e_krecv, e_k_ext, e_k_tot_ni)


def dt_di(e_k_ext, mu):
    """Expected time per newly informed node, ``1 / (mu * E[K_ext])``."""
    if mu <= 0:
        raise DomainError(f"mu must be positive (got {mu})")
    if e_k_ext <= 0:
        raise PropagationInterrupted("no external edges left")
    return 1.0 / (mu * e_k_ext)


def informed_distribution(p_ninf, p_tot, i, n, *, return_clamped=False):
    """Degree pmf of the informed nodes from the population mixture.

    ``P_inf = (n P_tot - (n - i) P_ninf) / i``.  Round-off negatives are set to
    zero and the result renormalized; the removed mass is returned when
    ``return_clamped`` is set.
    """
    if i < 1:
        raise DomainError(f"i must be >= 1 (got {i})")
    p_tot = np.asarray(p_tot, dtype=float)
    p_ninf = np.asarray(p_ninf, dtype=float)
    w = max(n - i, 0.0)
    p_inf = (n * p_tot - w * p_ninf) / i
    clamped = float(-p_inf[p_inf < 0].sum())
    if clamped > 0:
        p_inf = np.clip(p_inf, 0.0, None)
        p_inf /= p_inf.sum()
        logger.debug("informed pmf: clamped %.3g negative mass at i=%s", clamped, i)
    return (p_inf, clamped) if return_clamped else p_inf


def discrete_step(p_ninf, degrees, i, n):
    """One-node update ``P(.|i+1) = ((n-i) P(.|i) - P_recv(.|i)) / (n-i-1)``.

    This is the exact expectation recursion before the continuum limit and is
    kept as an independent reference for the integrator.
    """
    if i >= n - 1:
        raise DomainError(f"i must be < n - 1 (i={i}, n={n})")
    recv = receiver_distribution(p_ninf, degrees)
    return ((n - i) * np.asarray(p_ninf, dtype=float) - recv) / (n - i - 1)


def solver_grid(i0, n, steps_per_section):
    """Grid of ``i`` values from ``i0`` to ``n - 1``.

    Sections ``[i0, 10 i0], [10 i0, 100 i0], ...`` each hold
    ``steps_per_section`` equidistant steps; the last section is cut at
    ``n - 1`` and also gets ``steps_per_section`` steps.
    """
    if i0 < 1:
        raise DomainError(f"i0 must be >= 1 (got {i0})")
    if steps_per_section < 1:
        raise DomainError("steps_per_section must be >= 1")
    end = n - 1
    if i0 >= end:
        raise DomainError(f"i0 must be < n - 1 (i0={i0}, n={n})")
    pts = [np.array([float(i0)])]
    lo = float(i0)
    while lo < end:
        hi = min(10.0 * lo, float(end))
        pts.append(np.linspace(lo, hi, steps_per_section + 1)[1:])
        lo = hi
    return np.concatenate(pts)


@dataclass
class _State:
    p: np.ndarray
    k_ext: float
    t: float


def _derivatives(state, k, i, n, mu):
    return (
        dninf_di(state.p, k, i, n),
        dkext_di(state.p, k, state.k_ext, i, n),
        dt_di(state.k_ext, mu),
    )


def _euler_counts(state, k, i, di, n, mu):
    # Euler on the uninformed counts N(k) = (n - i) P(k), dN/di = -P_recv;
    # with di = 1 this is exactly the one-node recursion.  The counts total
    # n - i - di; dividing by their computed sum instead keeps round-off in
    # the normalization from growing like (n - i0) / (n - i) near the end.
    recv = receiver_distribution(state.p, k)
    dk = dkext_di(state.p, k, state.k_ext, i, n)
    dt = dt_di(state.k_ext, mu)
    counts = (n - i) * state.p - di * recv
    return _State(counts / counts.sum(), state.k_ext + di * dk, state.t + di * dt)


def _euler(state, k, i, di, n, mu):
    dp, dk, dt = _derivatives(state, k, i, n, mu)
    return _State(state.p + di * dp, state.k_ext + di * dk, state.t + di * dt)


def _midpoint(state, k, i, di, n, mu):
    half = _euler(state, k, i, 0.5 * di, n, mu)
    dp, dk, dt = _derivatives(half, k, i + 0.5 * di, n, mu)
    return _State(state.p + di * dp, state.k_ext + di * dk, state.t + di * dt)


STEPPERS = {"counts": _euler_counts, "euler": _euler, "midpoint": _midpoint}


@dataclass
class TheoryCurve:
    """Solver output sampled on the grid, with time measured from ``i0``.

    ``p_ninf[j]`` is the uninformed degree pmf over ``degrees`` at ``i[j]``.
    ``halted_at`` is set when the expected external edge count reached zero
    before ``n - 1``.
    """

    n: int
    i0: int
    mu: float
    degrees: np.ndarray
    p_tot: np.ndarray
    i: np.ndarray
    e_t: np.ndarray
    e_k_ext: np.ndarray
    p_ninf: np.ndarray
    halted_at: float | None = None
    clamped_mass: float = 0.0
    max_drift: float = 0.0
    min_entry: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def fraction(self):
        return self.i / self.n

    @property
    def p_inf(self):
        return np.array([informed_distribution(p, self.p_tot, i, self.n)
                         for p, i in zip(self.p_ninf, self.i)])

    @property
    def samples(self):
        """Rows of ``(i, e_t, e_k_ext, p_ninf, p_inf)``."""
        return list(zip(self.i, self.e_t, self.e_k_ext, self.p_ninf, self.p_inf))

    def time_at(self, i):
        """Expected time at (possibly fractional) informed count ``i``."""
        return np.interp(i, self.i, self.e_t, left=np.nan, right=np.nan)

    def p_ninf_at(self, i):
        if i <= self.i[0]:
            return self.p_ninf[0].copy()
        if i >= self.i[-1]:
            return self.p_ninf[-1].copy()
        j = int(np.searchsorted(self.i, i))
        w = (i - self.i[j - 1]) / (self.i[j] - self.i[j - 1])
        return (1 - w) * self.p_ninf[j - 1] + w * self.p_ninf[j]

    def p_inf_at(self, i):
        if i >= self.n:
            return self.p_tot.copy()
        return informed_distribution(self.p_ninf_at(i), self.p_tot, i, self.n)


def _as_pmf(p_tot, degrees):
    if isinstance(p_tot, DegreeDistribution):
        if not molloy_reed_ok(p_tot):
            warnings.warn("degree distribution violates the Molloy-Reed criterion;"
                          " no giant component is expected", RuntimeWarning,
                          stacklevel=3)
        return p_tot.pmf.astype(float), p_tot.degrees.astype(float)
    if degrees is None:
        raise TypeError("degrees are required when p_tot is an array")
    p = np.asarray(p_tot, dtype=float)
    return p / p.sum(), np.asarray(degrees, dtype=float)


def solve(p_tot, n, i0=5, mu=1.0, steps_per_section=DEFAULT_STEPS_PER_SECTION,
          *, degrees=None, stepper="counts", grid=None):
    """Integrate the propagation equations from one informed node to ``n - 1``.

    The run starts at ``i = 1`` with ``P_ninf = P_tot`` and
    ``E[K_ext] = E[k_tot]`` (a uniformly chosen source whose edges are all
    external).  ``[1, i0]`` is covered with ``steps_per_section`` steps, then
    the sectioned grid of :func:`solver_grid` is followed.  Time is re-zeroed
    at ``i0``.  A custom increasing ``grid`` starting at ``1`` overrides both.

    Parameters
    ----------
    p_tot : DegreeDistribution or array_like
        Total degree pmf; pass ``degrees`` alongside a bare array.
    n : int
        Number of nodes.
    i0 : int
        Informed count that defines the time origin.
    mu : float
        Per-edge message rate.
    steps_per_section : int
        Equidistant steps per decade section.
    stepper : {"counts", "euler", "midpoint"}
        Explicit one-step scheme.  ``"counts"`` applies Euler to the
        uninformed node counts per degree, ``"euler"`` to the pmf itself.

    On steps wider than one node, negative pmf entries down to ``-1e-6`` are
    treated as round-off (clamped, renormalized, reported) and anything lower
    raises :class:`StepSizeError`.  A step of at most one node cannot be
    refined further; its result is the one-node recursion and is kept as is,
    with the most negative entry recorded in ``min_entry``.

    Returns
    -------
    TheoryCurve
    """
    if mu <= 0:
        raise DomainError(f"mu must be positive (got {mu})")
    p, k = _as_pmf(p_tot, degrees)
    step = STEPPERS[stepper]
    if grid is None:
        pre = np.linspace(1.0, float(i0), steps_per_section + 1) if i0 > 1 else np.array([1.0])
        grid = np.concatenate([pre, solver_grid(i0, n, steps_per_section)[1:]])
    else:
        grid = np.asarray(grid, dtype=float)
        if grid[0] != 1.0 or np.any(np.diff(grid) <= 0) or grid[-1] > n - 1:
            raise DomainError("grid must start at 1, increase, and end by n - 1")
    if not np.any(np.isclose(grid, i0)):
        raise DomainError("i0 must lie on the grid")

    state = _State(p.copy(), _mean(p, k), 0.0)
    rows_i, rows_t, rows_k, rows_p = [grid[0]], [0.0], [state.k_ext], [state.p.copy()]
    clamped = 0.0
    max_drift = 0.0
    min_entry = 0.0
    halted = None
    for a, b in zip(grid[:-1], grid[1:]):
        new = step(state, k, a, b - a, n, mu)
        low = new.p.min()
        drift = abs(new.p.sum() - 1.0)
        max_drift = max(max_drift, drift)
        if drift > DRIFT_TOL:
            raise StepSizeError(
                f"normalization drift {drift:.3g} at i={b:.6g}; "
                "increase steps_per_section")
        if low < 0:
            if b - a <= 1.0:
                min_entry = min(min_entry, float(low))
            elif low < -NEGATIVE_TOL:
                raise StepSizeError(
                    f"pmf entry {low:.3g} < 0 stepping i={a:.6g}->{b:.6g}; "
                    "increase steps_per_section")
            else:
                clamped += float(-new.p[new.p < 0].sum())
                new.p = np.clip(new.p, 0.0, None)
                new.p /= new.p.sum()
        if new.k_ext <= 0:
            halted = float(a)
            logger.info("propagation interrupted: E[K_ext] <= 0 after i=%g", a)
            break
        state = new
        rows_i.append(b)
        rows_t.append(state.t)
        rows_k.append(state.k_ext)
        rows_p.append(state.p.copy())

    i_arr = np.array(rows_i)
    t_arr = np.array(rows_t)
    j0 = int(np.argmin(np.abs(i_arr - i0)))
    t_i0 = t_arr[j0]
    if clamped:
        logger.info("solver clamped %.3g negative pmf mass in total", clamped)
    return TheoryCurve(
        n=int(n), i0=int(i0), mu=float(mu), degrees=k.astype(int), p_tot=p,
        i=i_arr[j0:], e_t=t_arr[j0:] - t_i0, e_k_ext=np.array(rows_k)[j0:],
        p_ninf=np.array(rows_p)[j0:], halted_at=halted, clamped_mass=clamped,
        max_drift=max_drift, min_entry=min_entry, extra={"t_source_to_i0": float(t_i0)},
    )
