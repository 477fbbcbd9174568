"""Simulation and exact computation for ranges of random walks on groups.

The package has three layers:

* simulation: incremental range/boundary counters driven by compiled
  kernels (``range_engine``, ``estimators``),
* exact side: characteristic-function quadrature for Green functions,
  potential kernels and escape/hitting constants (``analytic``, ``taboo``),
* verification: an acceptance registry cross-checking the two layers
  against each other (``acceptance``, ``walkrange verify``).
"""

from walkrange.groups import get_group
from walkrange.laws import parse_law, FiniteSupportLaw, SymmetricZetaLaw
from walkrange.estimators import (
    ExperimentPlan,
    run_experiment,
    escape_probability,
    folner_limit,
    boundary_constant,
    regular_variation_fit,
    variance_scan,
)
from walkrange.analytic import (
    green,
    potential_kernel,
    gamma_constant,
    hitting_constants,
    escape_from_green,
)

__version__ = "0.1.0"

__all__ = [
    "get_group",
    "parse_law",
    "FiniteSupportLaw",
    "SymmetricZetaLaw",
    "ExperimentPlan",
    "run_experiment",
    "escape_probability",
    "folner_limit",
    "boundary_constant",
    "regular_variation_fit",
    "variance_scan",
    "green",
    "potential_kernel",
    "gamma_constant",
    "hitting_constants",
    "escape_from_green",
    "__version__",
]
