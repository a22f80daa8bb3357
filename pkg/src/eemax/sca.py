"""First-order solver for the weighted-sum-EE objective.

Each iteration replaces every link's energy efficiency with a surrogate
that is concave in that link's own power: the rate keeps its exact shape
(with interference frozen at the current iterate and the denominator
frozen at its current value), while all coupling — the own denominator
growth and the interference inflicted on other links — enters through a
linear term whose slope matches the true objective's partial derivative
at the expansion point.  The surrogate maximizers decouple into scalar
problems with closed-form solutions; an Armijo backtracking step along
the best-response direction guarantees monotone ascent to a stationary
point.

Two power-sweep protocols are provided for curves over a grid of power
budgets: one-shot (every budget starts from full power) and double-init
(additionally warm-starting from the previous budget's solution and
keeping the better outcome).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .branch_bound import SolveResult
from .model import (
    LN2,
    Allocation,
    MetricKind,
    PowerLike,
    ProblemInstance,
    as_power_vector,
    grad_wsee,
    objective,
)

__all__ = ["ScaOptions", "ScaTrace", "surrogate", "best_response", "armijo", "solve_sca", "sweep"]


@dataclass(frozen=True)
class ScaOptions:
    """Knobs for the successive-approximation loop.

    ``armijo_a`` and ``armijo_b`` are the sufficient-ascent fraction and the
    backtracking ratio; ``tol`` is the relative objective-change stopping
    threshold; ``init`` selects the starting point rule.
    """

    armijo_a: float = 0.1
    armijo_b: float = 0.5
    tol: float = 1e-8
    max_iter: int = 10_000
    init: str = "max-power"  # or "given"

    def __post_init__(self):
        if not 0.0 < self.armijo_a < 1.0:
            raise ValueError("armijo_a must lie in (0, 1)")
        if not 0.0 < self.armijo_b < 1.0:
            raise ValueError("armijo_b must lie in (0, 1)")
        if self.tol <= 0.0 or not math.isfinite(self.tol):
            raise ValueError("tol must be positive and finite")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.init not in ("max-power", "given"):
            raise ValueError("init must be 'max-power' or 'given'")


@dataclass
class ScaTrace:
    """Diagnostics of one run: the (nondecreasing) objective sequence, the
    accepted step sizes, and the projected-gradient residual at the end."""

    objectives: np.ndarray
    step_sizes: np.ndarray
    residual: float
    stagnated: bool = False


def _surrogate_coeffs(pvec: np.ndarray, inst: ProblemInstance):
    """Frozen quantities of the expansion point: effective gains, denominators,
    and the linear slopes c_i collecting everything outside link i's own rate.

    c_i = -w_i mu_i R_i / D_i^2 + sum_{j != i} w_j (dR_j/dp_i) / D_j.
    """
    beta_mat = inst.beta_matrix
    inter = 1.0 + beta_mat @ pvec
    sig = inst.alpha * pvec
    rates = np.log2(1.0 + sig / inter)
    denoms = inst.mu * pvec + inst.p_circuit
    a_eff = inst.alpha / inter
    w = inst.weights
    cross = w * sig / (inter * (inter + sig) * LN2 * denoms)
    c = -w * inst.mu * rates / denoms**2 - beta_mat.T @ cross
    return a_eff, denoms, c


def surrogate(p_i: float, i: int, p_t: PowerLike, inst: ProblemInstance) -> float:
    """Concave stand-in for the WSEE as a function of link i's power alone.

    Equals ``w_i EE_i`` at the expansion point and matches the true partial
    derivative of the WSEE there.
    """
    pvec = as_power_vector(p_t)
    if not 0 <= i < inst.L:
        raise IndexError(f"link index {i} out of range for L={inst.L}")
    a_eff, denoms, c = _surrogate_coeffs(pvec, inst)
    own = inst.weights[i] * math.log2(1.0 + a_eff[i] * p_i) / denoms[i]
    return float(own + (p_i - pvec[i]) * c[i])


def _best_response_all(pvec: np.ndarray, inst: ProblemInstance) -> np.ndarray:
    """Componentwise surrogate maximizers over [0, p_max]."""
    a_eff, denoms, c = _surrogate_coeffs(pvec, inst)
    bp = inst.p_max.copy()
    neg = c < 0
    if np.any(neg):
        interior = -inst.weights[neg] / (LN2 * denoms[neg] * c[neg]) - 1.0 / a_eff[neg]
        bp[neg] = np.clip(interior, 0.0, inst.p_max[neg])
    return bp


def best_response(i: int, p_t: PowerLike, inst: ProblemInstance) -> float:
    """Maximizer of link i's surrogate over [0, P_i].

    A nonnegative slope c_i makes the surrogate increasing (return the
    budget); otherwise the stationary point of rate-term-plus-line is
    clipped into the box.
    """
    pvec = as_power_vector(p_t)
    if not 0 <= i < inst.L:
        raise IndexError(f"link index {i} out of range for L={inst.L}")
    return float(_best_response_all(pvec, inst)[i])


def armijo(
    p_t: PowerLike,
    bp: PowerLike,
    inst: ProblemInstance,
    a: float = 0.1,
    b: float = 0.5,
    max_backtracks: int = 60,
) -> Tuple[float, int]:
    """Backtracking step size along d = bp - p_t.

    Returns ``(gamma, m)`` where ``gamma = b**m`` for the smallest integer
    m >= 0 satisfying ``f(p_t + gamma d) >= f(p_t) + a gamma grad f . d``.
    The search is guaranteed to end because d is an ascent direction (or
    zero); if m would exceed ``max_backtracks`` the last step is returned
    and the caller sees ``m == max_backtracks`` as a stagnation flag.
    """
    pvec = as_power_vector(p_t)
    bpvec = as_power_vector(bp)
    d = bpvec - pvec
    f0 = objective(pvec, inst, MetricKind.WSEE)
    slope = float(grad_wsee(pvec, inst) @ d)
    gamma = 1.0
    m = 0
    while objective(pvec + gamma * d, inst, MetricKind.WSEE) < f0 + a * gamma * slope:
        m += 1
        gamma *= b
        if m >= max_backtracks:
            break
    return gamma, m


def solve_sca(
    inst: ProblemInstance,
    p0: Optional[PowerLike] = None,
    opts: ScaOptions = ScaOptions(),
) -> Tuple[SolveResult, ScaTrace]:
    """Run the successive-approximation ascent until the objective stalls.

    Starting from full power (or a given feasible point), each iteration
    maximizes the decoupled surrogates, takes an Armijo step toward the
    best response, and stops when the relative objective change drops
    below ``opts.tol`` or the iteration cap trips (result then flagged
    non-certified).

    Returns the final point with its normalized WSEE value, plus a trace
    with the monotone objective history and the final projected-gradient
    residual.
    """
    start = time.perf_counter()
    if opts.init == "max-power":
        p = inst.p_max.copy()
    else:
        if p0 is None:
            raise ValueError("init='given' requires a starting point p0")
        p = as_power_vector(p0).copy()
        if p.shape != (inst.L,) or np.any(p < 0) or np.any(p > inst.p_max * (1 + 1e-12)):
            raise ValueError("p0 must be feasible for the instance")
        p = np.minimum(p, inst.p_max)

    f = objective(p, inst, MetricKind.WSEE)
    objectives = [f]
    steps: List[float] = []
    stagnated = False
    converged = False
    iterations = 0

    for _ in range(opts.max_iter):
        bp = _best_response_all(p, inst)
        d = bp - p
        slope = float(grad_wsee(p, inst) @ d)
        if slope <= 0.0:
            # Best response coincides with the iterate up to rounding: the
            # point is stationary and no ascent step exists.
            converged = True
            break
        iterations += 1
        gamma = 1.0
        m = 0
        f_new = objective(p + gamma * d, inst, MetricKind.WSEE)
        while f_new < f + opts.armijo_a * gamma * slope:
            m += 1
            gamma *= opts.armijo_b
            f_new = objective(p + gamma * d, inst, MetricKind.WSEE)
            if m >= 60:
                stagnated = True
                break
        if stagnated and f_new < f:
            # The largest representable progress along d is below floating
            # point resolution; keep the current (better) point.
            converged = True
            break
        p = np.clip(p + gamma * d, 0.0, inst.p_max)
        steps.append(gamma)
        objectives.append(f_new)
        if abs(f_new - f) <= opts.tol * max(1.0, abs(f)):
            f = f_new
            converged = True
            break
        f = f_new

    proj = np.clip(p + grad_wsee(p, inst), 0.0, inst.p_max)
    residual = float(np.linalg.norm(proj - p))
    result = SolveResult(
        p=Allocation(p),
        value=f,
        iterations=iterations,
        boxes_created=0,
        peak_queue=0,
        wall_time=time.perf_counter() - start,
        tolerance=None,
        certified=converged,
    )
    trace = ScaTrace(
        objectives=np.asarray(objectives),
        step_sizes=np.asarray(steps),
        residual=residual,
        stagnated=stagnated,
    )
    return result, trace


def sweep(
    channel: ProblemInstance,
    pmax_grid_dbw: Sequence[float],
    mode: str = "double-init",
    opts: ScaOptions = ScaOptions(),
) -> List[SolveResult]:
    """Solve the WSEE problem over an ascending grid of power budgets.

    ``channel`` provides the gains; its power budget is replaced by each
    grid value in turn (all links share the budget).  In ``one-shot`` mode
    every budget starts from full power; in ``double-init`` mode each
    budget after the first is additionally warm-started from the previous
    solution and the better of the two outcomes is kept, which can only
    improve on one-shot.
    """
    if mode not in ("one-shot", "double-init"):
        raise ValueError("mode must be 'one-shot' or 'double-init'")
    grid = [float(x) for x in pmax_grid_dbw]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("pmax grid must be strictly ascending")
    results: List[SolveResult] = []
    prev_p: Optional[np.ndarray] = None
    given_opts = ScaOptions(
        armijo_a=opts.armijo_a,
        armijo_b=opts.armijo_b,
        tol=opts.tol,
        max_iter=opts.max_iter,
        init="given",
    )
    full_opts = ScaOptions(
        armijo_a=opts.armijo_a,
        armijo_b=opts.armijo_b,
        tol=opts.tol,
        max_iter=opts.max_iter,
        init="max-power",
    )
    for dbw in grid:
        inst = channel.with_p_max(10.0 ** (dbw / 10.0))
        best, _ = solve_sca(inst, None, full_opts)
        if mode == "double-init" and prev_p is not None:
            warm, _ = solve_sca(inst, np.minimum(prev_p, inst.p_max), given_opts)
            if warm.value > best.value:
                best = warm
        results.append(best)
        prev_p = best.p.p
    return results
