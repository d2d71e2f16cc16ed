"""Event-driven Monte Carlo simulation of message propagation.

Every informed node sends along each of its edges after an exponential
delay with rate ``mu``; the earliest arrival informs the target.  Because the
delays are memoryless, drawing one delay per edge when its owner becomes
informed gives the same reception times as running a Poisson process on the
edge.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import propagate
from .degree_model import DegreeDistribution, ParameterError, sample_degrees
from .network import Network, build_configuration_model

__all__ = [
    "PropagationRecord",
    "NetworkSpec",
    "EnsembleResult",
    "run_rng",
    "simulate_once",
    "run_ensemble",
    "write_record",
]

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class PropagationRecord:
    """Outcome of one propagation run.

    ``reception_time`` is ``nan`` for nodes never reached.  ``degrees`` are
    the realized degrees of the network the run used.  The traces are only
    filled when tracing was requested; entry ``j`` describes the ``j``-th
    reception (entry 0 is the source).
    """

    source: int
    reception_time: np.ndarray
    infection_order: np.ndarray
    degrees: np.ndarray
    k_ext_trace: np.ndarray | None = None
    krecv_trace: np.ndarray | None = None
    events_scheduled: int = 0
    events_processed: int = 0
    queue_monotone: bool = True
    seed: object = None

    @property
    def n(self):
        return self.reception_time.size

    @property
    def informed_count(self):
        return self.infection_order.size

    @property
    def times_by_order(self):
        """Reception time of the ``i``-th informed node (non-decreasing)."""
        return self.reception_time[self.infection_order]


@dataclass(frozen=True)
class NetworkSpec:
    """Recipe for a fresh configuration-model network per run."""

    distribution: DegreeDistribution
    n: int

    def build(self, rng):
        degrees = sample_degrees(self.distribution, self.n, rng)
        return build_configuration_model(degrees, rng)


@dataclass
class EnsembleResult:
    records: list
    rejected: int
    runs: int
    n: int

    @property
    def accepted(self):
        return len(self.records)

    @property
    def acceptance_rate(self):
        return self.accepted / self.runs if self.runs else 0.0


def simulate_once(net, mu, rng, trace=False, source=None):
    """Propagate from a uniformly random source (or ``source``)."""
    if not mu > 0:
        raise ParameterError(f"mu must be positive (got {mu})")
    if source is None:
        source = int(rng.integers(net.n))
    delays = rng.exponential(1.0 / mu, size=net.indices.size)
    (recv, order, _, kext, krecv, krecv_inf,
     pushed, popped, monotone) = propagate(net.indptr, net.indices, source, delays, trace)
    return PropagationRecord(
        source=source,
        reception_time=recv,
        infection_order=order,
        degrees=net.degrees,
        k_ext_trace=kext if trace else None,
        krecv_trace=np.column_stack([krecv, krecv_inf]) if trace else None,
        events_scheduled=int(pushed),
        events_processed=int(popped),
        queue_monotone=bool(monotone),
    )


def run_rng(master_seed, run_index):
    """Independent generator for one run, a pure function of its arguments."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(run_index,)))


def run_ensemble(net_spec, mu, runs, completion_threshold=0.99, master_seed=0,
                 parallelism=1, trace=False, first_run=0):
    """Run ``runs`` independent propagations and keep the completed ones.

    ``net_spec`` is either a :class:`NetworkSpec` (a fresh network per run)
    or a fixed :class:`Network`.  A run is accepted when it informs at least
    ``completion_threshold * n`` nodes.  Runs are numbered from
    ``first_run``, so an ensemble can be produced in batches.  The outcome
    depends only on ``master_seed`` and the run numbers, not on
    ``parallelism``.
    """
    if runs < 1:
        raise ParameterError("runs must be >= 1")
    if not 0 < completion_threshold <= 1:
        raise ParameterError("completion_threshold must be in (0, 1]")
    n = net_spec.n
    need = completion_threshold * n

    def one(run_index):
        rng = run_rng(master_seed, run_index)
        net = net_spec if isinstance(net_spec, Network) else net_spec.build(rng)
        rec = simulate_once(net, mu, rng, trace=trace)
        rec.seed = (master_seed, run_index)
        return rec if rec.informed_count >= need - 1e-9 else None

    indices = range(first_run, first_run + runs)
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(one, indices))
    else:
        results = [one(r) for r in indices]
    accepted = [r for r in results if r is not None]
    rejected = runs - len(accepted)
    logger.info("ensemble: %d/%d runs accepted", len(accepted), runs)
    return EnsembleResult(accepted, rejected, runs, n)


def write_record(path, record):
    """Dump a run as ``node reception_time`` rows after a header comment."""
    lines = [f"# seed={record.seed} source={record.source} "
             f"informed_count={record.informed_count}"]
    for v in record.infection_order:
        lines.append(f"{v} {float(record.reception_time[v])!r}")
    Path(path).write_text("\n".join(lines) + "\n")
