"""Shared fixtures: random instances, boxes, and scenario channels."""

from __future__ import annotations

import numpy as np
import pytest

from eemax.branch_bound import Box
from eemax.model import ProblemInstance


def random_instance(
    rng: np.random.Generator,
    L: int,
    pmax_dbw_range=(-30.0, 20.0),
    mu: float = 4.0,
    p_circuit: float = 1.0,
    weights: str = "ones",
) -> ProblemInstance:
    """Instance with log-uniform direct gains and weaker cross gains."""
    alpha = 10.0 ** rng.uniform(-1.0, 3.0, size=L)
    beta = 10.0 ** rng.uniform(-4.0, 0.0, size=L * (L - 1))
    pmax = 10.0 ** (rng.uniform(*pmax_dbw_range) / 10.0)
    if weights == "ones":
        w = None
    elif weights == "random":
        w = rng.uniform(0.2, 2.0, size=L)
    else:
        raise ValueError(weights)
    return ProblemInstance(
        L=L,
        alpha=alpha,
        beta=beta,
        p_max=np.full(L, pmax),
        mu=np.full(L, mu),
        p_circuit=np.full(L, p_circuit),
        weights=w,
    )


def random_box(rng: np.random.Generator, inst: ProblemInstance) -> Box:
    """Random sub-box of the instance's feasible region."""
    a = rng.uniform(0.0, 1.0, size=inst.L) * inst.p_max
    b = rng.uniform(0.0, 1.0, size=inst.L) * inst.p_max
    return Box(r=np.minimum(a, b), s=np.maximum(a, b))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def compiled_kernels():
    """Force one-time numba compilation so timings elsewhere stay clean."""
    from eemax.branch_bound import Tolerance, lambert_w0, solve_global
    from eemax.model import MetricKind

    lambert_w0(1.0)
    inst = ProblemInstance(
        L=2, alpha=[5.0, 3.0], beta=[0.1, 0.2], p_max=[1.0, 1.0], mu=[4.0, 4.0],
        p_circuit=[1.0, 1.0],
    )
    for kind in MetricKind:
        solve_global(inst, kind, Tolerance("relative", 0.01))
    return True
