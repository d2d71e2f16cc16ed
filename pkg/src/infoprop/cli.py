"""Command-line entry point: configuration, orchestration, reproducible outputs.

A run is described by a plain-text ``key = value`` file (``#`` comments);
command-line flags override file values.  Outputs are a pure function of the
configuration, whatever the parallelism.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
import scipy

from . import __version__, meanfield, stats, theory
from .degree_model import (
    EMPIRICAL,
    POISSON,
    POWER_LAW,
    DegreeDistribution,
    ParameterError,
    molloy_reed_ok,
)
from .simulator import NetworkSpec, run_ensemble

__all__ = [
    "RunConfig",
    "ConfigError",
    "parse_config",
    "parse_config_text",
    "serialize_config",
    "build_distribution",
    "run",
    "main",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_NO_RUNS",
    "EXIT_IO",
]

logger = logging.getLogger("infoprop")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_RUNS = 3
EXIT_IO = 4

PARALLELISM_ENV = "INFOPROP_PARALLELISM"
SUBCOMMANDS = ("simulate", "theory", "meanfield", "compare", "all")

_KIND_ALIASES = {
    "powerlaw": POWER_LAW, "power_law": POWER_LAW, "scalefree": POWER_LAW,
    "poisson": POISSON, "poissonlike": POISSON, "er": POISSON,
    "empirical": EMPIRICAL,
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


class NoAcceptedRuns(RuntimeError):
    pass


def _default_parallelism():
    raw = os.environ.get(PARALLELISM_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{PARALLELISM_ENV}: expected a positive integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"{PARALLELISM_ENV}: expected a positive integer, got {raw!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    """One experiment.

    ``kind`` selects the degree law: ``powerlaw`` needs ``gamma_prime``,
    ``poisson`` needs ``gamma`` and ``empirical`` needs ``pmf_file``.  With
    ``k_max`` unset the natural cutoff for ``n`` nodes is used.
    """

    kind: str
    n: int
    gamma: float | None = None
    gamma_prime: float | None = None
    k_min: int | None = None
    k_max: int | None = None
    pmf_file: str | None = None
    runs: int = 1000
    mu: float = 1.0
    threshold: float = 0.99
    i0: int = 5
    steps_per_section: int = theory.DEFAULT_STEPS_PER_SECTION
    seed: int = 0
    parallelism: int = field(default=1, compare=False)
    milestones: tuple = stats.DEFAULT_MILESTONES
    outputs: str = "out"
    mf_dt: float = meanfield.DEFAULT_DT
    mf_seeding: str = "uniform"
    mf_t_end: float = 50.0

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["milestones"] = list(self.milestones)
        return d


# key -> (parser, domain description)
def _int(s):
    if isinstance(s, int):
        return s
    f = float(s)
    if not f.is_integer():
        raise ValueError
    return int(f)


def _milestones(s):
    if isinstance(s, (list, tuple)):
        return tuple(float(x) for x in s)
    return tuple(float(x) for x in str(s).split(",") if x.strip())


_FIELDS = {
    "kind": (str, "one of powerlaw, poisson, empirical"),
    "n": (_int, "integer >= 2"),
    "gamma": (float, "real > 0"),
    "gamma_prime": (float, "real > 2"),
    "k_min": (_int, "integer >= 0 (>= 1 for powerlaw)"),
    "k_max": (_int, "integer >= k_min"),
    "pmf_file": (str, "path to a 'k probability' file"),
    "runs": (_int, "integer >= 1"),
    "mu": (float, "real > 0"),
    "threshold": (float, "fraction in (0, 1]"),
    "i0": (_int, "integer in [1, n - 1]"),
    "steps_per_section": (_int, "integer >= 1"),
    "seed": (_int, "integer >= 0"),
    "parallelism": (_int, "integer >= 1"),
    "milestones": (_milestones, "comma-separated increasing fractions in (0, 1]"),
    "outputs": (str, "directory path"),
    "mf_dt": (float, "real > 0"),
    "mf_seeding": (str, "uniform or degree"),
    "mf_t_end": (float, "real > 0"),
}
_REQUIRED = ("kind", "n")


def _fail(key, value):
    raise ConfigError(f"{key}: expected {_FIELDS[key][1]}, got {value!r}")


def _coerce(values):
    out = {}
    for key, raw in values.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}; known keys: {', '.join(_FIELDS)}")
        if raw is None:
            continue
        try:
            out[key] = _FIELDS[key][0](raw)
        except (TypeError, ValueError):
            _fail(key, raw)
    return out


def _validate(v):
    for key in _REQUIRED:
        if key not in v:
            raise ConfigError(f"missing required key {key!r} ({_FIELDS[key][1]})")
    kind = _KIND_ALIASES.get(v["kind"].strip().lower())
    if kind is None:
        _fail("kind", v["kind"])
    v["kind"] = kind
    checks = {
        "n": lambda x: x >= 2,
        "gamma": lambda x: x > 0 and math.isfinite(x),
        "gamma_prime": lambda x: x > 2 and math.isfinite(x),
        "runs": lambda x: x >= 1,
        "mu": lambda x: x > 0 and math.isfinite(x),
        "threshold": lambda x: 0 < x <= 1,
        "steps_per_section": lambda x: x >= 1,
        "seed": lambda x: x >= 0,
        "parallelism": lambda x: x >= 1,
        "mf_dt": lambda x: x > 0,
        "mf_t_end": lambda x: x > 0,
        "mf_seeding": lambda x: x in ("uniform", "degree"),
        "milestones": lambda x: (len(x) > 0 and all(0 < f <= 1 for f in x)
                                 and all(a < b for a, b in zip(x, x[1:]))),
    }
    for key, ok in checks.items():
        if key in v and not ok(v[key]):
            _fail(key, v[key])
    if "i0" in v and not 1 <= v["i0"] <= v["n"] - 1:
        _fail("i0", v["i0"])
    if kind == POWER_LAW:
        if "gamma_prime" not in v:
            raise ConfigError("missing required key 'gamma_prime' for kind powerlaw "
                              f"({_FIELDS['gamma_prime'][1]})")
        v.setdefault("k_min", 2)
        if v["k_min"] < 1:
            _fail("k_min", v["k_min"])
    elif kind == POISSON:
        if "gamma" not in v:
            raise ConfigError(f"missing required key 'gamma' for kind poisson "
                              f"({_FIELDS['gamma'][1]})")
        v.setdefault("k_min", 1)
        if v["k_min"] < 0:
            _fail("k_min", v["k_min"])
    elif "pmf_file" not in v:
        raise ConfigError("missing required key 'pmf_file' for kind empirical")
    if v.get("k_max") is not None and v["k_max"] < v.get("k_min", 0):
        _fail("k_max", v["k_max"])
    v.setdefault("parallelism", _default_parallelism())
    return RunConfig(**v)


def parse_config_text(text, overrides=None, source="<config>"):
    """Parse ``key = value`` lines, apply ``overrides`` and validate."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    values = _coerce(values)
    values.update(_coerce(overrides or {}))
    return _validate(values)


def parse_config(path=None, overrides=None):
    """Read a config file (optional) and apply flag ``overrides``."""
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    return parse_config_text(text, overrides, source=str(path or "<flags>"))


def _format_value(value):
    if isinstance(value, tuple):
        return ",".join(repr(float(x)) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg):
    """Canonical ``key = value`` text; :func:`parse_config_text` inverts it."""
    lines = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if value is not None:
            lines.append(f"{f.name} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def build_distribution(cfg):
    try:
        if cfg.kind == POWER_LAW:
            return DegreeDistribution.power_law(cfg.gamma_prime, cfg.k_min, cfg.k_max, n=cfg.n)
        if cfg.kind == POISSON:
            return DegreeDistribution.poisson(cfg.gamma, cfg.k_min, cfg.k_max, n=cfg.n)
        return DegreeDistribution.from_file(cfg.pmf_file)
    except OSError as exc:
        raise ConfigError(f"pmf_file: cannot read {cfg.pmf_file}: {exc.strerror}") from exc
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# pipeline stages


def _simulate(cfg, dist):
    result = run_ensemble(NetworkSpec(dist, cfg.n), cfg.mu, cfg.runs,
                          completion_threshold=cfg.threshold, master_seed=cfg.seed,
                          parallelism=cfg.parallelism)
    if result.accepted == 0:
        raise NoAcceptedRuns(
            f"none of {cfg.runs} runs informed {cfg.threshold:.4g} of the nodes; "
            "check that the degree law has a giant component or lower 'threshold'")
    clip = cfg.milestones[-1] > cfg.threshold
    st = stats.aggregate(result.records, cfg.i0, cfg.milestones, clip_milestones=clip)
    return result, st


def _theory(cfg, dist):
    return theory.solve(dist, cfg.n, cfg.i0, cfg.mu, cfg.steps_per_section)


def _meanfield(cfg, dist):
    return meanfield.integrate(dist, cfg.n, cfg.i0, cfg.mu, cfg.mf_dt, cfg.mf_t_end,
                               seeding=cfg.mf_seeding)


def _int_grid(lo, hi):
    return np.arange(math.ceil(lo), math.floor(hi) + 1)


def _write_theory(out, curve, milestones):
    grid = _int_grid(curve.i[0], curve.i[-1])
    stats._write(out / "theory.csv", ["i", "fraction", "t_theory", "e_k_ext"],
                 zip(grid, grid / curve.n, curve.time_at(grid),
                     np.interp(grid, curve.i, curve.e_k_ext)))
    header = ["k"]
    cols = []
    for f in milestones:
        lab = stats.milestone_label(f)
        header += [f"p_ninf_{lab}", f"p_inf_{lab}"]
        i = f * curve.n
        p_ninf = (curve.p_ninf_at(i) if i < curve.n
                  else np.full(curve.degrees.size, np.nan))
        cols += [p_ninf, curve.p_inf_at(i)]
    stats._write(out / "theory_degrees.csv", header,
                 zip(curve.degrees, *cols))
    return ["theory.csv", "theory_degrees.csv"]


def _write_meanfield(out, curve):
    grid = _int_grid(curve.i0, curve.fraction[-1] * curve.n)
    stats._write(out / "meanfield.csv", ["i", "fraction", "t_meanfield"],
                 zip(grid, grid / curve.n, curve.time_at(grid)))
    return ["meanfield.csv"]


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _write_json(path, data):
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def _sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions():
    return {"infoprop": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version()}


def run(subcommand, cfg):
    """Execute one subcommand and write its outputs; returns the exit status."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    out = Path(cfg.outputs)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        logger.error("output directory %s is not writable: %s", out, exc)
        return EXIT_IO

    dist = build_distribution(cfg)
    if not molloy_reed_ok(dist):
        logger.warning("degree law violates the Molloy-Reed criterion; "
                       "most runs will not reach the completion threshold")
    summary = {"subcommand": subcommand, "n": cfg.n, "seed": cfg.seed,
               "distribution": {"kind": dist.kind, "k_min": dist.k_min,
                                "k_max": dist.k_max}}
    written = []
    want_sim = subcommand in ("simulate", "compare", "all")
    want_th = subcommand in ("theory", "compare", "all")
    want_mf = subcommand in ("meanfield", "compare", "all")
    try:
        st = th = mf = None
        if want_sim:
            result, st = _simulate(cfg, dist)
            summary["simulation"] = {
                "runs": result.runs, "accepted": result.accepted,
                "rejected": result.rejected, "acceptance_rate": result.acceptance_rate,
                "excluded_from_aggregate": st.excluded_runs,
            }
        if want_th:
            th = _theory(cfg, dist)
            summary["theory"] = {
                "halted_at": th.halted_at, "max_normalization_drift": th.max_drift,
                "clamped_mass": th.clamped_mass, "min_pmf_entry": th.min_entry,
                "t_source_to_i0": th.extra["t_source_to_i0"],
                "t_end": float(th.e_t[-1]),
            }
        if want_mf:
            mf = _meanfield(cfg, dist)
            summary["meanfield"] = {"max_clamp": mf.max_clamp,
                                    "final_fraction": float(mf.fraction[-1])}

        if subcommand in ("simulate", "all"):
            stats.write_simulation_csv(out / "simulation.csv", st)
            written.append("simulation.csv")
        if subcommand == "simulate":
            stats.write_degrees_csv(out / "degrees.csv", st)
            written.append("degrees.csv")
        if subcommand in ("theory", "all"):
            written += _write_theory(out, th, cfg.milestones)
        if subcommand in ("meanfield", "all"):
            written += _write_meanfield(out, mf)
        if subcommand in ("compare", "all"):
            report = stats.compare_curves(st, th, mf)
            stats.write_propagation_csv(out / "propagation.csv", report)
            stats.write_degrees_csv(out / "degrees.csv", st, th, cfg.milestones)
            written += ["propagation.csv", "degrees.csv"]
            summary["deviations"] = report.checkpoints
            summary["milestone_total_variation"] = {
                stats.milestone_label(f): stats.total_variation(
                    st.informed_degree_pmf_at[f],
                    _pad_model(th, f, st.n))
                for f in cfg.milestones}
        _write_json(out / "summary.json", summary)
        written.append("summary.json")
        # where outputs go and how many threads ran do not change them
        (out / "config.txt").write_text("".join(
            line + "\n" for line in serialize_config(cfg).splitlines()
            if line.split(" = ")[0] not in _UNRECORDED))
        written.append("config.txt")
        manifest = {
            "config": {k: v for k, v in cfg.to_dict().items() if k not in _UNRECORDED},
            "seed": cfg.seed,
            "versions": _versions(),
            "files": {name: _sha256(out / name) for name in sorted(set(written))},
        }
        _write_json(out / "manifest.json", manifest)
    except NoAcceptedRuns as exc:
        logger.error("%s", exc)
        return EXIT_NO_RUNS
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    logger.info("wrote %s to %s", ", ".join(sorted(set(written))), out)
    return EXIT_OK


_UNRECORDED = ("parallelism", "outputs")


def _pad_model(curve, fraction, n):
    p = np.zeros(int(curve.degrees[-1]) + 1)
    p[curve.degrees] = curve.p_inf_at(fraction * n)
    return p


# ---------------------------------------------------------------------------
# argument parsing

_FLAGS = [
    ("--seed", "seed", int, "master seed"),
    ("--parallelism", "parallelism", int,
     f"worker threads (default ${PARALLELISM_ENV} or 1)"),
    ("--out", "outputs", str, "output directory"),
    ("--runs", "runs", int, "number of simulation runs"),
    ("--n", "n", int, "number of nodes"),
    ("--kind", "kind", str, "degree law: powerlaw, poisson or empirical"),
    ("--gamma", "gamma", float, "Poisson mean parameter"),
    ("--gamma-prime", "gamma_prime", float, "power-law exponent (> 2)"),
    ("--k-min", "k_min", int, "smallest degree"),
    ("--k-max", "k_max", int, "largest degree (default: natural cutoff)"),
    ("--pmf-file", "pmf_file", str, "two-column 'k probability' file"),
    ("--mu", "mu", float, "per-edge message rate"),
    ("--threshold", "threshold", float, "completion fraction for accepting a run"),
    ("--i0", "i0", int, "informed count that defines time zero"),
    ("--steps-per-section", "steps_per_section", int, "solver steps per decade"),
    ("--milestones", "milestones", str, "comma-separated milestone fractions"),
    ("--mf-dt", "mf_dt", float, "mean-field step size"),
    ("--mf-seeding", "mf_seeding", str, "mean-field seeding: uniform or degree"),
    ("--mf-t-end", "mf_t_end", float, "mean-field integration horizon"),
]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="infoprop",
        description="Simulate and model message propagation on random networks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="key = value config file")
        for flag, dest, typ, helptext in _FLAGS:
            p.add_argument(flag, dest=dest, type=typ, default=None, help=helptext)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    overrides = {dest: getattr(args, dest) for _, dest, _, _ in _FLAGS}
    try:
        cfg = parse_config(args.config, overrides)
        return run(args.subcommand, cfg)
    except ConfigError as exc:
        print(f"infoprop: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
