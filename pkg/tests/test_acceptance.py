"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

The heavy ensembles (n = 10000, at least 1000 accepted runs per degree law)
are built once per module and shared.  Set ``INFOPROP_PARALLELISM`` to run
the simulations on several threads; results do not depend on it.
"""

import math
import os
import time

import numpy as np
import pytest

from infoprop.cli import main
from infoprop.degree_model import DegreeDistribution, mean_degree
from infoprop.meanfield import integrate
from infoprop.network import Network
from infoprop.simulator import NetworkSpec, run_ensemble, simulate_once
from infoprop.stats import aggregate, compare_curves, merge, total_variation
from infoprop.theory import informed_distribution, solve

N = 10000
MIN_ACCEPTED = 1000
BATCH = 250
MILESTONES = (0.01, 0.5, 1.0)
PARALLELISM = int(os.environ.get("INFOPROP_PARALLELISM", "1"))

LAWS = {
    "Poisson gamma=3": DegreeDistribution.poisson(3.0, 1, n=N),
    "Poisson gamma=4": DegreeDistribution.poisson(4.0, 1, n=N),
    "Poisson gamma=5": DegreeDistribution.poisson(5.0, 1, n=N),
    "Poisson gamma=4.58": DegreeDistribution.poisson(4.58, 1, n=N),
    "power law gamma'=2.5": DegreeDistribution.power_law(2.5, 2, n=N),
    "power law gamma'=2.75": DegreeDistribution.power_law(2.75, 2, n=N),
    "power law gamma'=3.0": DegreeDistribution.power_law(3.0, 2, n=N),
}
FIG3 = ["Poisson gamma=3", "Poisson gamma=4", "Poisson gamma=5",
        "power law gamma'=2.5", "power law gamma'=2.75", "power law gamma'=3.0"]
ER, SF = "Poisson gamma=4.58", "power law gamma'=2.75"
REFERENCE = (SF, ER)


def log(criterion_log, number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    criterion_log.append(line)
    print(line)


class Ensemble:
    """Aggregated accepted runs plus bookkeeping for complete runs."""

    def __init__(self, dist, seed):
        self.stats = None
        self.runs = 0
        self.full_runs = 0
        self.full_pmf_exact = True
        self.full_stats = None
        t0 = time.perf_counter()
        while self.stats is None or self.stats.accepted_runs < MIN_ACCEPTED:
            res = run_ensemble(NetworkSpec(dist, N), 1.0, BATCH, master_seed=seed,
                               parallelism=PARALLELISM, first_run=self.runs)
            self.runs += BATCH
            if not res.records:
                continue
            part = aggregate(res.records, 5, MILESTONES, clip_milestones=True)
            self.stats = part if self.stats is None else merge(self.stats, part)
            full = [r for r in res.records if r.informed_count == N]
            for r in full:
                # a complete run's 100% milestone is the network's degree pmf
                one = aggregate([r], 5, (1.0,))
                total = np.bincount(r.degrees) / N
                self.full_pmf_exact &= np.array_equal(one.informed_degree_pmf_at[1.0], total)
            if full:
                fs = aggregate(full, 5, MILESTONES)
                self.full_stats = fs if self.full_stats is None else merge(self.full_stats, fs)
                self.full_runs += len(full)
        self.seconds = time.perf_counter() - t0

    @property
    def accepted(self):
        return self.stats.accepted_runs


@pytest.fixture(scope="module")
def ensembles():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = Ensemble(LAWS[name], seed=1000 + list(LAWS).index(name))
        return cache[name]

    return get


@pytest.fixture(scope="module")
def theory_curves():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = solve(LAWS[name], N)
        return cache[name]

    return get


@pytest.fixture(scope="module")
def meanfield_curves():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = integrate(LAWS[name], N)
        return cache[name]

    return get


def sim_time(ens, i):
    return float(ens.stats.time_at(i))


# -- 1 ---------------------------------------------------------------------

def test_criterion_01_minimum_of_exponentials(criterion_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240101)
    details, ok = [], True
    for k in (1, 5, 50):
        star = Network.from_edges(k + 1, [(0, j) for j in range(1, k + 1)])
        first = np.empty(10**5)
        for r in range(first.size):
            first[r] = simulate_once(star, 1.0, rng, source=0).times_by_order[1]
        se = first.std(ddof=1) / math.sqrt(first.size)
        z = (first.mean() - 1 / k) / se
        ok &= abs(z) < 3
        details.append(f"K={k}: mean={first.mean():.5f} vs {1 / k:.5f} (z={z:+.2f})")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 10
    log(criterion_log, 1, ok, "; ".join(details) + f"; {elapsed:.1f}s")
    assert ok


# -- 2 ---------------------------------------------------------------------

def test_criterion_02_external_edge_bookkeeping(criterion_log):
    t0 = time.perf_counter()
    receptions = 0
    ok = True
    spec = NetworkSpec(LAWS[SF], N)
    run = 0
    while receptions < 10**6:
        res = run_ensemble(spec, 1.0, 20, completion_threshold=1e-9, master_seed=2,
                           trace=True, first_run=run)
        run += 20
        for rec in res.records:
            krecv, kinf = rec.krecv_trace.T
            step = np.diff(rec.k_ext_trace)
            ok &= bool(np.all(step == krecv[1:] - 2 * kinf[1:]))
            ok &= bool(np.all(kinf[1:] >= 1))
            ok &= rec.k_ext_trace[0] == krecv[0]
            receptions += rec.informed_count - 1
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30
    log(criterion_log, 2, ok, f"{receptions} receptions over {run} runs checked "
        f"exactly; {elapsed:.1f}s")
    assert ok


# -- 3 ---------------------------------------------------------------------

def test_criterion_03_mixture_identity(criterion_log):
    n = 1000
    checked, ok, worst = 0, True, 0.0
    for name in REFERENCE:
        dist = DegreeDistribution.poisson(4.58, 1, n=n) if name == ER else \
            DegreeDistribution.power_law(2.75, 2, n=n)
        res = run_ensemble(NetworkSpec(dist, n), 1.0, 10, completion_threshold=1e-9,
                           master_seed=3)
        for rec in res.records:
            deg = rec.degrees
            kmax = deg.max()
            tot = np.bincount(deg, minlength=kmax + 1)
            inf = np.zeros(kmax + 1, np.int64)
            times = rec.times_by_order
            for i in range(1, rec.informed_count + 1):
                inf[deg[rec.infection_order[i - 1]]] += 1
                # uninformed nodes counted independently from reception times
                later = np.isnan(rec.reception_time) | (rec.reception_time > times[i - 1])
                ninf = np.bincount(deg[later], minlength=kmax + 1)
                ok &= bool(np.array_equal(inf + ninf, tot))
                if i < n:
                    p = informed_distribution(ninf / (n - i), tot / n, i, n)
                    worst = max(worst, float(np.abs(p - inf / i).max()))
                checked += 1
    ok &= worst < 1e-12
    log(criterion_log, 3, ok, f"{checked} (run, i) pairs exact in integer counts; "
        f"float mixture max error {worst:.1e}")
    assert ok


# -- 4 ---------------------------------------------------------------------

def test_criterion_04_solver_conservation(criterion_log, theory_curves):
    details, ok = [], True
    for name in REFERENCE:
        c = theory_curves(name)
        drift = float(np.abs(c.p_ninf.sum(axis=1) - 1).max())
        means = c.p_ninf @ c.degrees
        rise = float(np.diff(means).max())
        ok &= drift <= 1e-9 and rise <= 0 and c.halted_at is None
        details.append(f"{name}: max |sum-1|={drift:.1e}, max dE[k]={rise:.1e}")
    log(criterion_log, 4, ok, "; ".join(details))
    assert ok


# -- 5 ---------------------------------------------------------------------

def test_criterion_05_theory_matches_simulation(criterion_log, ensembles, theory_curves):
    details, ok = [], True
    t0 = time.perf_counter()
    for name in FIG3:
        ens = ensembles(name)
        th = theory_curves(name)
        errs = {}
        for f in (0.5, 0.8):
            s, t = sim_time(ens, f * N), float(th.time_at(f * N))
            errs[f] = (t - s) / s
        good = ens.accepted >= MIN_ACCEPTED and abs(errs[0.5]) < 0.05 and abs(errs[0.8]) < 0.10
        ok &= good
        details.append(f"{name} [{ens.accepted}/{ens.runs} runs]: "
                       f"50% {errs[0.5]:+.1%}, 80% {errs[0.8]:+.1%}"
                       f"{'' if good else ' (out of tolerance)'}")
        print(details[-1])
    elapsed = time.perf_counter() - t0
    log(criterion_log, 5, ok, "; ".join(details) + f"; {elapsed:.0f}s")
    assert ok


def test_criterion_05_late_stage_direction(ensembles, theory_curves):
    # the model underestimates the time once most nodes are informed
    for name in REFERENCE:
        ens, th = ensembles(name), theory_curves(name)
        for f in (0.85, 0.9, 0.95, 0.99):
            assert th.time_at(f * N) <= sim_time(ens, f * N)


# -- 6 ---------------------------------------------------------------------

def test_criterion_06_meanfield_underestimates(criterion_log, ensembles, theory_curves,
                                                meanfield_curves):
    details, ok = [], True
    for name in REFERENCE:
        rep = compare_curves(ensembles(name).stats, theory_curves(name),
                             meanfield_curves(name))
        below = all(r["t_meanfield"] < r["t_sim"] for r in rep.checkpoints)
        mid = rep.checkpoint(0.5)
        closer = abs(mid["theory_minus_sim"]) < abs(mid["meanfield_minus_sim"])
        ok &= below and closer
        details.append(
            f"{name}: mf-sim at 25/50/75% = "
            + "/".join(f"{r['meanfield_minus_sim']:+.3f}" for r in rep.checkpoints)
            + f", |th-sim|={abs(mid['theory_minus_sim']):.3f} "
            f"< |mf-sim|={abs(mid['meanfield_minus_sim']):.3f}: {closer}")
    log(criterion_log, 6, ok, "; ".join(details))
    assert ok


# -- 7 ---------------------------------------------------------------------

def test_criterion_07_scale_free_vs_poisson(criterion_log, ensembles):
    er, sf = ensembles(ER), ensembles(SF)
    t50 = sim_time(sf, 0.5 * N), sim_time(er, 0.5 * N)
    t99 = sim_time(sf, 0.99 * N), sim_time(er, 0.99 * N)
    # "comparably" is read as at most 10% later
    ok = t50[0] <= 1.10 * t50[1] and t99[0] > t99[1]
    log(criterion_log, 7, ok,
        f"t50 SF={t50[0]:.3f} ER={t50[1]:.3f}; t99 SF={t99[0]:.3f} ER={t99[1]:.3f}; "
        f"mean degree SF={mean_degree(LAWS[SF]):.3f} ER={mean_degree(LAWS[ER]):.3f}")
    assert ok


# -- 8 ---------------------------------------------------------------------

def test_criterion_08_informed_degree_pmfs(criterion_log, ensembles, theory_curves):
    details, ok = [], True
    for name in REFERENCE:
        ens, th = ensembles(name), theory_curves(name)
        tv = {}
        for f in (0.01, 0.5):
            model = np.zeros(int(th.degrees[-1]) + 1)
            model[th.degrees] = th.p_inf_at(f * N)
            tv[f] = total_variation(ens.stats.informed_degree_pmf_at[f], model)
        model_full = np.array_equal(th.p_inf_at(N), th.p_tot)
        fs = ens.full_stats
        sim_full = (ens.full_runs > 0 and ens.full_pmf_exact
                    and np.array_equal(fs.informed_degree_pmf_at[1.0], fs.total_degree_pmf))
        good = tv[0.01] < 0.05 and tv[0.5] < 0.05 and model_full and sim_full
        ok &= good
        details.append(f"{name}: TV 1%={tv[0.01]:.4f}, 50%={tv[0.5]:.4f}; 100% exact "
                       f"model={model_full}, sim={sim_full} over {ens.full_runs} complete runs")
    log(criterion_log, 8, ok, "; ".join(details))
    assert ok


# -- 9 ---------------------------------------------------------------------

def test_criterion_09_median_time_per_degree(criterion_log, ensembles):
    details, ok = [], True
    for name in REFERENCE:
        st = ensembles(name).stats
        ks = [k for k in sorted(st.median_time_per_degree) if k <= 15]
        t = np.array([st.median_time_per_degree[k] for k in ks])
        contiguous = ks == list(range(ks[0], ks[-1] + 1))
        gains = t[:-1] - t[1:]
        positive = [ks[j] for j in range(gains.size) if gains[j] <= 0]
        growing = [ks[j + 1] for j in range(gains.size - 1) if gains[j + 1] >= gains[j]]
        good = contiguous and not positive and not growing
        ok &= good
        details.append(f"{name}: k={ks[0]}..{ks[-1]}, non-positive gain at k={positive}, "
                       f"gain not shrinking at k={growing}")
        print(name, "median t(k):", np.round(t, 4).tolist())
        print(name, "gains:", np.round(gains, 4).tolist())
        print(name, "runs per k:", [st.median_runs_per_degree[k] for k in ks])
    log(criterion_log, 9, ok, "; ".join(details))
    assert ok


# -- 10 --------------------------------------------------------------------

def test_criterion_10_determinism(criterion_log, tmp_path):
    args = ["all", "--kind", "poisson", "--gamma", "4.58", "--n", "2000", "--runs", "200",
            "--seed", "11"]
    outs = []
    for tag, par in (("a", 1), ("b", 1), ("c", 4)):
        out = tmp_path / tag
        assert main([*args, "--parallelism", str(par), "--out", str(out)]) == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    same = all((outs[0] / f).read_bytes() == (o / f).read_bytes()
               for o in outs[1:] for f in names)
    csvs = [f for f in names if f.endswith(".csv")]
    log(criterion_log, 10, same, f"{len(names)} files ({len(csvs)} CSVs) byte-identical "
        "across two runs at parallelism 1 and one at parallelism 4")
    assert same


# -- 11 --------------------------------------------------------------------

def test_criterion_11_discrete_recursion(criterion_log):
    n = 200
    details, ok = [], True
    for name, dist in (("Poisson gamma=4.58", DegreeDistribution.poisson(4.58, 1, n=n)),
                       ("power law gamma'=2.75", DegreeDistribution.power_law(2.75, 2, n=n))):
        k = dist.degrees.astype(float)
        p = dist.pmf.copy()
        recursion = [p.copy()]
        for i in range(1, n - 1):
            p = ((n - i) * p - k * p / np.dot(k, p)) / (n - i - 1)
            recursion.append(p.copy())
        recursion = np.array(recursion)
        unit = solve(dist, n, i0=1, grid=np.arange(1.0, n))
        err = float(np.abs(unit.p_ninf - recursion).max())
        fine = solve(dist, n, i0=5)
        fine_err = max(float(np.abs(fine.p_ninf_at(i) - recursion[i - 1]).max())
                       for i in range(5, n))
        ok &= err <= 1e-3
        details.append(f"{name}: max |diff| {err:.1e} with unit steps "
                       f"(fine default grid: {fine_err:.1e})")
    log(criterion_log, 11, ok, "; ".join(details))
    assert ok
