"""Globally optimal, first-order optimal, and learned power allocation
for energy-efficiency objectives in wireless interference networks.

The package is organized around six building blocks:

- :mod:`eemax.model` — problem instances, objectives, gradients, baselines;
- :mod:`eemax.branch_bound` — certified global solver (branch-and-bound
  with closed-form per-ratio bounds via the Lambert W function);
- :mod:`eemax.sca` — first-order solver (successive pseudo-concave
  approximation with Armijo line search) and power-sweep protocols;
- :mod:`eemax.scenario` — random network generation, path loss models,
  dataset assembly and CSV serialization;
- :mod:`eemax.ann` — a from-scratch feedforward network that learns the
  map from channel features to optimal power allocations;
- :mod:`eemax.cli` — command-line front end tying the pipeline together.
"""

from .model import (
    Allocation,
    MetricKind,
    ProblemInstance,
    baseline,
    ee_link,
    grad_wsee,
    normalize_instance,
    objective,
    rate,
    sinr,
)
from .branch_bound import Box, SolveResult, Tolerance, lambert_w0, ratio_max, solve_global
from .sca import ScaOptions, ScaTrace, solve_sca, sweep

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "MetricKind",
    "ProblemInstance",
    "baseline",
    "ee_link",
    "grad_wsee",
    "normalize_instance",
    "objective",
    "rate",
    "sinr",
    "Box",
    "SolveResult",
    "Tolerance",
    "lambert_w0",
    "ratio_max",
    "solve_global",
    "ScaOptions",
    "ScaTrace",
    "solve_sca",
    "sweep",
    "__version__",
]
