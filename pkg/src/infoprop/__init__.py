"""Stochastic propagation of messages on configuration-model networks.

The package has four layers: degree laws and network construction, an
event-driven simulator, an expectation-level solver with a mean-field
baseline, and ensemble statistics that compare the three.
"""

__version__ = "0.1.0"

from .degree_model import (
    DegreeDistribution,
    ParameterError,
    mean_degree,
    molloy_reed_ok,
    molloy_reed_value,
    natural_cutoff,
    sample_degree,
    sample_degrees,
    second_moment,
)
from .meanfield import MeanFieldCurve, integrate
from .network import (
    ComponentLabeling,
    Network,
    build_configuration_model,
    components,
    degree_histogram,
)
from .simulator import (
    EnsembleResult,
    NetworkSpec,
    PropagationRecord,
    run_ensemble,
    simulate_once,
)
from .stats import EnsembleStats, aggregate, compare_curves, merge
from .theory import TheoryCurve, solve

__all__ = [
    "DegreeDistribution",
    "ParameterError",
    "mean_degree",
    "second_moment",
    "molloy_reed_value",
    "molloy_reed_ok",
    "natural_cutoff",
    "sample_degree",
    "sample_degrees",
    "Network",
    "ComponentLabeling",
    "build_configuration_model",
    "components",
    "degree_histogram",
    "PropagationRecord",
    "NetworkSpec",
    "EnsembleResult",
    "simulate_once",
    "run_ensemble",
    "TheoryCurve",
    "solve",
    "MeanFieldCurve",
    "integrate",
    "EnsembleStats",
    "aggregate",
    "merge",
    "compare_curves",
]
