"""Ensemble statistics and curve comparison.

Ensemble times are averaged at fixed informed count ``i`` after shifting
every run so that its ``i0``-th reception happens at time zero.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .meanfield import MeanFieldCurve
from .theory import TheoryCurve

__all__ = [
    "EnsembleStats",
    "ComparisonReport",
    "aggregate",
    "merge",
    "compare_curves",
    "interpolate",
    "total_variation",
    "milestone_label",
    "write_simulation_csv",
    "write_propagation_csv",
    "write_degrees_csv",
]

logger = logging.getLogger(__name__)

DEFAULT_MILESTONES = (0.01, 0.5, 1.0)
CHECKPOINTS = (0.25, 0.5, 0.75)


def milestone_count(fraction, n):
    """Number of informed nodes at a milestone, ``ceil(fraction * n)``."""
    return max(1, math.ceil(fraction * n - 1e-9))


def milestone_label(fraction):
    return f"{fraction * 100:g}pct"


@dataclass
class EnsembleStats:
    """Aggregated ensemble curves.

    ``mean_t_of_i[j]`` is the mean aligned time of the ``(j+1)``-th reception.
    Pmfs are arrays indexed by degree ``0..max_degree``.  The ``*_runs``
    counts are kept so that partial aggregates can be merged exactly.
    """

    n: int
    i0: int
    accepted_runs: int
    mean_t_of_i: np.ndarray
    informed_degree_pmf_at: dict
    median_time_per_degree: dict
    median_runs_per_degree: dict
    mean_k_ext_of_i: np.ndarray | None = None
    excluded_runs: int = 0
    total_degree_pmf: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def i(self):
        return np.arange(1, self.mean_t_of_i.size + 1)

    @property
    def fraction(self):
        return self.i / self.n

    @property
    def degrees(self):
        return np.arange(self.total_degree_pmf.size)

    def time_at(self, i):
        return np.interp(i, self.i, self.mean_t_of_i, left=np.nan, right=np.nan)

    def median_curve(self):
        ks = sorted(self.median_time_per_degree)
        return np.array(ks), np.array([self.median_time_per_degree[k] for k in ks])


def _pad(a, size):
    out = np.zeros(size)
    out[:a.size] = a
    return out


def aggregate(records, i0=5, milestones=DEFAULT_MILESTONES, clip_milestones=False):
    """Reduce accepted propagation records to :class:`EnsembleStats`.

    Runs with fewer than ``i0`` receptions are dropped (and counted).  For
    every milestone fraction the degree pmf of the first
    ``ceil(fraction * n)`` informed nodes is averaged over runs.  The median
    reception time of a degree class is taken per run (classes with fewer
    than two nodes, or not yet half informed, are skipped) and then averaged
    over the runs that have it.

    With ``clip_milestones`` a run that stops short of a milestone uses all
    of its informed nodes instead of raising; this is how a 100% milestone
    is read from runs accepted at a 99% completion threshold.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    n = records[0].n
    if any(r.n != n for r in records):
        raise ValueError("records come from networks of different size")
    kept = [r for r in records if r.informed_count >= i0]
    excluded = len(records) - len(kept)
    if excluded:
        logger.warning("aggregate: excluded %d runs with fewer than %d receptions",
                       excluded, i0)
    if not kept:
        raise ValueError(f"no record reached {i0} informed nodes")
    need = max(milestone_count(f, n) for f in milestones) if milestones else 0
    short = [r for r in kept if r.informed_count < need]
    if short and not clip_milestones:
        raise ValueError(f"{len(short)} records end before the last milestone "
                         f"({need} informed nodes)")

    length = min(r.informed_count for r in kept)
    kmax = max(int(r.degrees.max(initial=0)) for r in kept)
    t_sum = np.zeros(length)
    pmf_sum = {f: np.zeros(kmax + 1) for f in milestones}
    tot_sum = np.zeros(kmax + 1)
    med_sum = np.zeros(kmax + 1)
    med_cnt = np.zeros(kmax + 1, dtype=np.int64)
    traced = all(r.k_ext_trace is not None for r in kept)
    kext_sum = np.zeros(length) if traced else None

    for r in kept:
        times = r.times_by_order
        shift = times[i0 - 1]
        t_sum += times[:length] - shift
        ordered_deg = r.degrees[r.infection_order]
        for f in milestones:
            m = min(milestone_count(f, n), r.informed_count)
            pmf_sum[f] += np.bincount(ordered_deg[:m], minlength=kmax + 1) / m
        tot_sum += np.bincount(r.degrees, minlength=kmax + 1) / n
        if traced:
            kext_sum += r.k_ext_trace[:length]
        # per-degree median: sort nodes by (degree, time), unreached last
        t_all = np.where(np.isnan(r.reception_time), np.inf, r.reception_time)
        order = np.lexsort((t_all, r.degrees))
        counts = np.bincount(r.degrees, minlength=kmax + 1)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        ks = np.flatnonzero(counts >= 2)
        half = starts[ks] + (counts[ks] + 1) // 2 - 1
        med = t_all[order[half]] - shift
        ok = np.isfinite(med)
        med_sum[ks[ok]] += med[ok]
        med_cnt[ks[ok]] += 1

    runs = len(kept)
    present = np.flatnonzero(med_cnt)
    return EnsembleStats(
        n=n,
        i0=i0,
        accepted_runs=runs,
        mean_t_of_i=t_sum / runs,
        informed_degree_pmf_at={f: s / runs for f, s in pmf_sum.items()},
        median_time_per_degree={int(k): med_sum[k] / med_cnt[k] for k in present},
        median_runs_per_degree={int(k): int(med_cnt[k]) for k in present},
        mean_k_ext_of_i=kext_sum / runs if traced else None,
        excluded_runs=excluded,
        total_degree_pmf=tot_sum / runs,
    )


def merge(a, b):
    """Combine two aggregates as if their records had been aggregated together."""
    if a.n != b.n or a.i0 != b.i0:
        raise ValueError("cannot merge statistics of different n or i0")
    if set(a.informed_degree_pmf_at) != set(b.informed_degree_pmf_at):
        raise ValueError("milestones differ")
    wa, wb = a.accepted_runs, b.accepted_runs
    w = wa + wb
    length = min(a.mean_t_of_i.size, b.mean_t_of_i.size)
    size = max(a.total_degree_pmf.size, b.total_degree_pmf.size)

    def avg(x, y):
        return (wa * _pad(x, size) + wb * _pad(y, size)) / w

    med, cnt = {}, {}
    for k in set(a.median_time_per_degree) | set(b.median_time_per_degree):
        ca = a.median_runs_per_degree.get(k, 0)
        cb = b.median_runs_per_degree.get(k, 0)
        med[k] = (ca * a.median_time_per_degree.get(k, 0.0)
                  + cb * b.median_time_per_degree.get(k, 0.0)) / (ca + cb)
        cnt[k] = ca + cb
    kext = None
    if a.mean_k_ext_of_i is not None and b.mean_k_ext_of_i is not None:
        kext = (wa * a.mean_k_ext_of_i[:length] + wb * b.mean_k_ext_of_i[:length]) / w
    return EnsembleStats(
        n=a.n, i0=a.i0, accepted_runs=w,
        mean_t_of_i=(wa * a.mean_t_of_i[:length] + wb * b.mean_t_of_i[:length]) / w,
        informed_degree_pmf_at={f: avg(a.informed_degree_pmf_at[f],
                                       b.informed_degree_pmf_at[f])
                                for f in a.informed_degree_pmf_at},
        median_time_per_degree=dict(sorted(med.items())),
        median_runs_per_degree=dict(sorted(cnt.items())),
        mean_k_ext_of_i=kext,
        excluded_runs=a.excluded_runs + b.excluded_runs,
        total_degree_pmf=avg(a.total_degree_pmf, b.total_degree_pmf),
    )


def interpolate(x, xp, fp):
    """Piecewise-linear interpolation; ``nan`` outside ``[xp[0], xp[-1]]``."""
    return np.interp(x, xp, fp, left=np.nan, right=np.nan)


def total_variation(p, q):
    size = max(len(p), len(q))
    return 0.5 * float(np.abs(_pad(np.asarray(p), size) - _pad(np.asarray(q), size)).sum())


def _time_curve(obj):
    """``(i, t)`` arrays for any supported curve type."""
    if isinstance(obj, EnsembleStats):
        return obj.i.astype(float), obj.mean_t_of_i, obj.n
    if isinstance(obj, TheoryCurve):
        return obj.i, obj.e_t, obj.n
    if isinstance(obj, MeanFieldCurve):
        frac, idx = np.unique(obj.fraction, return_index=True)
        return frac * obj.n, obj.t[idx], obj.n
    i, t, n = obj
    return np.asarray(i, dtype=float), np.asarray(t, dtype=float), n


@dataclass
class ComparisonReport:
    """Three time curves on a shared ``i`` grid plus checkpoint deviations."""

    n: int
    i: np.ndarray
    t_sim: np.ndarray
    t_theory: np.ndarray
    t_meanfield: np.ndarray
    checkpoints: list

    @property
    def fraction(self):
        return self.i / self.n

    def checkpoint(self, fraction):
        for row in self.checkpoints:
            if math.isclose(row["fraction"], fraction):
                return row
        raise KeyError(fraction)

    def to_dict(self):
        return {"n": self.n, "checkpoints": self.checkpoints}


def compare_curves(sim, theory, mf, checkpoints=CHECKPOINTS, grid=None):
    """Put the simulated time curve and both model curves on a common ``i`` grid.

    Each checkpoint row holds the three times at ``fraction * n`` informed
    nodes, the deviations ``theory - sim`` and ``meanfield - sim`` (absolute
    and relative to sim) and their signs.
    """
    curves = [_time_curve(c) for c in (sim, theory, mf)]
    n = curves[0][2]
    if any(c[2] != n for c in curves):
        raise ValueError("curves refer to different network sizes")
    lo = max(c[0][0] for c in curves)
    hi = min(c[0][-1] for c in curves)
    if lo > hi:
        raise ValueError("curves have no overlapping range of informed counts")
    if grid is None:
        grid = np.arange(math.ceil(lo), math.floor(hi) + 1, dtype=float)
        if grid.size == 0:
            grid = np.array([lo, hi])
    grid = np.asarray(grid, dtype=float)
    ts = [interpolate(grid, c[0], c[1]) for c in curves]

    rows = []
    for f in checkpoints:
        i = f * n
        if not lo <= i <= hi:
            raise ValueError(f"checkpoint {f} outside the common range")
        s, th, m = (float(interpolate(i, c[0], c[1])) for c in curves)
        rows.append({
            "fraction": f, "i": i, "t_sim": s, "t_theory": th, "t_meanfield": m,
            "theory_minus_sim": th - s, "meanfield_minus_sim": m - s,
            "theory_rel": (th - s) / s if s else math.nan,
            "meanfield_rel": (m - s) / s if s else math.nan,
            "theory_sign": int(np.sign(th - s)), "meanfield_sign": int(np.sign(m - s)),
        })
    return ComparisonReport(int(n), grid, ts[0], ts[1], ts[2], rows)


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_simulation_csv(path, stats):
    _write(path, ["i", "fraction", "t_sim"],
           zip(stats.i, stats.fraction, stats.mean_t_of_i))


def write_propagation_csv(path, report):
    """``i,fraction,t_sim,t_theory,t_meanfield`` rows on the report grid."""
    i = report.i
    as_int = np.all(i == np.round(i))
    _write(path, ["i", "fraction", "t_sim", "t_theory", "t_meanfield"],
           zip(i.astype(int) if as_int else i, report.fraction,
               report.t_sim, report.t_theory, report.t_meanfield))


def write_degrees_csv(path, stats, theory=None, milestones=None):
    """Per-degree simulated and model pmfs at each milestone plus median times.

    Without ``theory`` only the simulated columns are written.
    """
    milestones = tuple(milestones or stats.informed_degree_pmf_at)
    kmax = stats.total_degree_pmf.size - 1
    model = {}
    if theory is not None:
        kmax = max(kmax, int(theory.degrees[-1]))
        for f in milestones:
            p = theory.p_inf_at(f * stats.n)
            model[f] = np.zeros(kmax + 1)
            model[f][theory.degrees] = p
    header = ["k"]
    for f in milestones:
        lab = milestone_label(f)
        header.append(f"pmf_sim_{lab}")
        if theory is not None:
            header.append(f"pmf_model_{lab}")
    header.append("median_time")
    rows = []
    for k in range(kmax + 1):
        row = [k]
        for f in milestones:
            sim = stats.informed_degree_pmf_at[f]
            row.append(float(sim[k]) if k < sim.size else 0.0)
            if theory is not None:
                row.append(float(model[f][k]))
        row.append(stats.median_time_per_degree.get(k, math.nan))
        rows.append(row)
    _write(path, header, rows)
