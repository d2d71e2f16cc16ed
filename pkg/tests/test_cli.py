import csv
import hashlib
import json
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infoprop import cli
from infoprop.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NO_RUNS,
    EXIT_OK,
    ConfigError,
    RunConfig,
    main,
    parse_config,
    parse_config_text,
    serialize_config,
)


def test_minimal_config_defaults(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# reference network\nkind = poisson\ngamma = 4.58\nn = 10000\n")
    cfg = parse_config(f)
    assert (cfg.mu, cfg.threshold, cfg.i0) == (1.0, 0.99, 5)
    assert cfg.k_min == 1
    assert cfg.milestones == (0.01, 0.5, 1.0)


def test_power_law_exponent_rejected():
    with pytest.raises(ConfigError, match="gamma_prime.*> 2"):
        parse_config_text("kind = powerlaw\ngamma_prime = 2.0\nn = 100\n")


@pytest.mark.parametrize("text, key", [
    ("kind = poisson\ngamma = 3\nn = 100\ncolour = red\n", "colour"),
    ("kind = poisson\ngamma = 3\n", "n"),
    ("kind = poisson\nn = 100\n", "gamma"),
    ("kind = poisson\ngamma = 3\nn = 100\nthreshold = 1.5\n", "threshold"),
    ("kind = poisson\ngamma = 3\nn = 100\nruns = 2.5\n", "runs"),
    ("kind = poisson\ngamma = 3\nn = 100\ni0 = 100\n", "i0"),
    ("kind = poisson\ngamma = 3\nn = 100\nmilestones = 0.5,0.1\n", "milestones"),
    ("kind = ring\nn = 100\n", "kind"),
    ("kind = empirical\nn = 100\n", "pmf_file"),
    ("kind = poisson\ngamma = 3\nn = 100\nn = 200\n", "n"),
])
def test_diagnostics_name_the_key(text, key):
    with pytest.raises(ConfigError, match=key):
        parse_config_text(text)


def test_flags_override_file(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("kind = poisson\ngamma = 4.58\nn = 10000\nseed = 1\n")
    cfg = parse_config(f, {"seed": 9, "n": 500, "runs": None})
    assert cfg.seed == 9 and cfg.n == 500 and cfg.runs == 1000


def test_parallelism_from_environment(monkeypatch):
    monkeypatch.setenv(cli.PARALLELISM_ENV, "3")
    assert parse_config_text("kind = poisson\ngamma = 3\nn = 50\n").parallelism == 3
    monkeypatch.setenv(cli.PARALLELISM_ENV, "zero")
    with pytest.raises(ConfigError, match=cli.PARALLELISM_ENV):
        parse_config_text("kind = poisson\ngamma = 3\nn = 50\n")


@settings(max_examples=80, deadline=None)
@given(
    kind=st.sampled_from(["poisson", "powerlaw"]),
    a=st.floats(2.01, 10.0),
    n=st.integers(10, 10**6),
    mu=st.floats(1e-3, 1e3),
    threshold=st.floats(0.01, 1.0),
    seed=st.integers(0, 2**63),
    milestones=st.lists(st.floats(0.001, 1.0), min_size=1, max_size=4, unique=True),
)
def test_round_trip(kind, a, n, mu, threshold, seed, milestones):
    key = "gamma" if kind == "poisson" else "gamma_prime"
    cfg = parse_config_text("", {"kind": kind, key: a, "n": n, "mu": mu,
                                 "threshold": threshold, "seed": seed,
                                 "milestones": sorted(milestones)})
    again = parse_config_text(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


def _read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


ARGS = ["--kind", "poisson", "--gamma", "4.58", "--n", "1000", "--runs", "30",
        "--seed", "5"]


def test_all_writes_outputs_and_manifest(tmp_path):
    out = tmp_path / "out"
    assert main(["all", *ARGS, "--out", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    names = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert set(manifest["files"]) == names
    for name, digest in manifest["files"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    assert manifest["seed"] == 5
    assert {"numpy", "scipy", "numba", "infoprop"} <= set(manifest["versions"])
    assert _read_csv(out / "propagation.csv")[0] == [
        "i", "fraction", "t_sim", "t_theory", "t_meanfield"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["simulation"]["accepted"] + summary["simulation"]["rejected"] == 30
    assert len(summary["deviations"]) == 3
    assert summary["theory"]["halted_at"] is None


def test_repeated_runs_are_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["all", *ARGS, "--out", str(a)]) == EXIT_OK
    assert main(["all", *ARGS, "--out", str(b), "--parallelism", "3"]) == EXIT_OK
    for p in a.iterdir():
        assert p.read_bytes() == (b / p.name).read_bytes(), p.name


def test_theory_point_mass(tmp_path):
    pmf = tmp_path / "pmf.txt"
    pmf.write_text("4 1.0\n")
    out = tmp_path / "out"
    rc = main(["theory", "--kind", "empirical", "--pmf-file", str(pmf), "--n", "300",
               "--steps-per-section", "100", "--out", str(out)])
    assert rc == EXIT_OK
    rows = _read_csv(out / "theory_degrees.csv")
    assert rows[0][:3] == ["k", "p_ninf_1pct", "p_inf_1pct"]
    assert rows[1][0] == "4" and rows[1][1:5] == ["1", "1", "1", "1"]
    assert not (out / "simulation.csv").exists()


def test_compare_scale_free_meanfield_below_simulation(tmp_path):
    out = tmp_path / "out"
    rc = main(["compare", "--kind", "powerlaw", "--gamma-prime", "2.75", "--k-min", "2",
               "--n", "2000", "--runs", "60", "--out", str(out)])
    assert rc == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    row = [r for r in summary["deviations"] if r["fraction"] == 0.5][0]
    assert row["t_meanfield"] < row["t_sim"]
    assert (out / "degrees.csv").exists() and not (out / "theory.csv").exists()


def test_simulate_and_meanfield_outputs(tmp_path):
    assert main(["simulate", *ARGS, "--out", str(tmp_path / "s")]) == EXIT_OK
    assert _read_csv(tmp_path / "s" / "degrees.csv")[0] == [
        "k", "pmf_sim_1pct", "pmf_sim_50pct", "pmf_sim_100pct", "median_time"]
    assert main(["meanfield", *ARGS, "--out", str(tmp_path / "m")]) == EXIT_OK
    assert _read_csv(tmp_path / "m" / "meanfield.csv")[0] == ["i", "fraction", "t_meanfield"]


def test_exit_codes(tmp_path, capsys):
    assert main(["theory", "--kind", "powerlaw", "--gamma-prime", "1.5", "--n", "10"]) \
        == EXIT_CONFIG
    assert "gamma_prime" in capsys.readouterr().err
    sub = ["simulate", "--kind", "poisson", "--gamma", "0.5", "--n", "200", "--runs", "3"]
    assert main([*sub, "--out", str(tmp_path / "x")]) == EXIT_NO_RUNS
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["theory", *ARGS, "--out", str(blocker / "sub")]) == EXIT_IO
    assert main(["theory", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "infoprop", "theory", *ARGS,
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert (tmp_path / "theory.csv").exists()


def test_config_record_round_trips(tmp_path):
    assert main(["theory", *ARGS, "--out", str(tmp_path)]) == EXIT_OK
    cfg = parse_config(tmp_path / "config.txt")
    assert isinstance(cfg, RunConfig) and cfg.seed == 5 and cfg.n == 1000
