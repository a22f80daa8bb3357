"""Certified global solver for energy-efficiency power control.

The solver runs a best-first branch-and-bound over axis-aligned boxes
``[r, s]`` of power vectors.  Its bound freezes the interference every
link receives at the box's lower corner ``r`` — interference only hurts,
so this relaxation can only increase each per-link energy efficiency —
and then maximizes each link's ratio independently over ``[r_i, s_i]``.
Each scalar maximization has a closed form through the principal branch
of the Lambert W function, so bounds cost a handful of flops per link.

Boxes are split through the midpoint between the lower corner and the
bound's candidate point, along the coordinate with the largest gap; the
queue is pruned against the incumbent with an absolute (``gamma + eps``)
or relative (``(1 + eps) * gamma``) test, and the returned value carries
the corresponding epsilon-optimality certificate.

The scalar kernels and the whole per-iteration branch step are
JIT-compiled; a single solve is sequential by contract (the best-first
order is deterministic), while independent solves share no mutable state
and may run concurrently.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from numba import njit

from .model import Allocation, MetricKind, PowerLike, ProblemInstance, as_power_vector

__all__ = [
    "Box",
    "Tolerance",
    "SolveResult",
    "lambert_w0",
    "ratio_max",
    "bound",
    "bisect",
    "solve_global",
]

_INV_E = math.exp(-1.0)
_BRANCH_EDGE = -_INV_E

# Numeric tags for the metric dispatch inside the JIT kernels.
_KIND_CODE = {
    MetricKind.WSEE: 0,
    MetricKind.GEE: 1,
    MetricKind.WPEE: 2,
    MetricKind.WMEE: 3,
    MetricKind.WSR: 4,
}


# ---------------------------------------------------------------------------
# Scalar kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _lambert_w0_kernel(x: float) -> float:
    """Principal branch of the Lambert W function by Halley iteration.

    The initial guess is branch-appropriate: a series around the branch
    point -1/e, ``log1p`` in the middle range, and the asymptotic
    ``log x - log log x`` expansion for large arguments.  Halley steps are
    evaluated in a product-free arrangement so they cannot overflow even
    for arguments near the top of the double range.
    """
    if x == 0.0:
        return 0.0
    if x < -0.32358170806015724:
        # Series around the branch point w(-1/e) = -1.
        q = 2.0 * (math.e * x + 1.0)
        if q <= 0.0:
            return -1.0
        p = math.sqrt(q)
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    elif x < math.e:
        w = math.log1p(x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    tol = 1e-14 * max(1.0, abs(x))
    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            break
        fp = ew * (w + 1.0)
        if fp == 0.0:
            break
        u = f / fp
        # Halley correction u / (1 - u * (w + 2) / (2 w + 2)), product-free.
        denom = 1.0 - u * (w + 2.0) / (2.0 * (w + 1.0))
        if denom <= 0.5:
            w -= u  # fall back to a Newton step when far from the root
        else:
            w -= u / denom
        if w < -1.0:
            w = -1.0
    return w


@njit(cache=True)
def _ratio_max_kernel(at: float, mu: float, pc: float, lo: float, hi: float):
    """Maximize log2(1 + at*p) / (mu*p + pc) over [lo, hi].

    The ratio is pseudo-concave, so its unconstrained stationary point —
    available in closed form through W0 — is the global maximizer, and
    clipping it into the interval solves the constrained problem.
    """
    if mu == 0.0:
        p = hi
    else:
        t = at * pc / mu - 1.0
        if abs(t) < 1e-9:
            p = (math.e - 1.0) / at
        else:
            p = (t / _lambert_w0_kernel(t * _INV_E) - 1.0) / at
        if p < lo:
            p = lo
        elif p > hi:
            p = hi
    return p, math.log2(1.0 + at * p) / (mu * p + pc)


@njit(cache=True)
def _objective_kernel(p, alpha, beta_mat, mu, pc, w, kind: int) -> float:
    """Normalized objective value at p for the metric tagged by `kind`."""
    L = p.size
    if kind == 1:  # GEE
        num = 0.0
        den = 0.0
        for i in range(L):
            inter = 1.0
            for j in range(L):
                inter += beta_mat[i, j] * p[j]
            num += math.log2(1.0 + alpha[i] * p[i] / inter)
            den += mu[i] * p[i] + pc[i]
        return num / den
    if kind == 4:  # WSR
        total = 0.0
        for i in range(L):
            inter = 1.0
            for j in range(L):
                inter += beta_mat[i, j] * p[j]
            total += w[i] * math.log2(1.0 + alpha[i] * p[i] / inter)
        return total
    if kind == 2:  # WPEE
        prod = 1.0
        for i in range(L):
            inter = 1.0
            for j in range(L):
                inter += beta_mat[i, j] * p[j]
            ee = math.log2(1.0 + alpha[i] * p[i] / inter) / (mu[i] * p[i] + pc[i])
            prod *= ee ** w[i]
        return prod
    if kind == 3:  # WMEE
        best = np.inf
        for i in range(L):
            inter = 1.0
            for j in range(L):
                inter += beta_mat[i, j] * p[j]
            ee = w[i] * math.log2(1.0 + alpha[i] * p[i] / inter) / (mu[i] * p[i] + pc[i])
            if ee < best:
                best = ee
        return best
    # WSEE
    total = 0.0
    for i in range(L):
        inter = 1.0
        for j in range(L):
            inter += beta_mat[i, j] * p[j]
        total += w[i] * math.log2(1.0 + alpha[i] * p[i] / inter) / (mu[i] * p[i] + pc[i])
    return total


@njit(cache=True)
def _bound_into(r, s, alpha, beta_mat, mu, pc, w, kind: int, ptilde) -> float:
    """Upper bound over the box [r, s]; per-link maximizers written to `ptilde`.

    Interference is frozen at the lower corner r; each link's ratio is then
    maximized independently, and the per-link maxima are combined according
    to the metric (sum, product, minimum, or — for GEE — a sum of ratios
    sharing a denominator whose cross terms are frozen at r).
    """
    L = r.size
    if kind == 4:  # WSR: each rate is increasing in own power
        total = 0.0
        for i in range(L):
            inter = 1.0
            for j in range(L):
                inter += beta_mat[i, j] * r[j]
            ptilde[i] = s[i]
            total += w[i] * math.log2(1.0 + alpha[i] / inter * s[i])
        return total
    if kind == 1:  # GEE
        pc_total = 0.0
        mu_dot_r = 0.0
        for k in range(L):
            pc_total += pc[k]
            mu_dot_r += mu[k] * r[k]
        total = 0.0
        for i in range(L):
            inter = 1.0
            for j in range(L):
                inter += beta_mat[i, j] * r[j]
            pc_eff = pc_total + (mu_dot_r - mu[i] * r[i])
            p, v = _ratio_max_kernel(alpha[i] / inter, mu[i], pc_eff, r[i], s[i])
            ptilde[i] = p
            total += v
        return total
    # WSEE / WPEE / WMEE share the per-link maxima.
    if kind == 2:
        acc = 1.0
    elif kind == 3:
        acc = np.inf
    else:
        acc = 0.0
    for i in range(L):
        inter = 1.0
        for j in range(L):
            inter += beta_mat[i, j] * r[j]
        p, v = _ratio_max_kernel(alpha[i] / inter, mu[i], pc[i], r[i], s[i])
        ptilde[i] = p
        if kind == 2:
            acc *= v ** w[i]
        elif kind == 3:
            wv = w[i] * v
            if wv < acc:
                acc = wv
        else:
            acc += w[i] * v
    return acc


@njit(cache=True)
def _bound_kernel(r, s, alpha, beta_mat, mu, pc, w, kind: int):
    """Allocating wrapper around `_bound_into`: returns (bound, candidates)."""
    ptilde = np.empty(r.size)
    return _bound_into(r, s, alpha, beta_mat, mu, pc, w, kind, ptilde), ptilde


# The search state lives in flat slot pools (corner/candidate rows plus the
# cached bound and an insertion counter per box) so the entire best-first
# loop can run inside one JIT kernel.  The heap stores slot indices; its
# priority is (bound descending, counter ascending), a strict total order,
# so the pop sequence is identical to a lexicographic heap of
# ``(-bound, counter)`` tuples.


@njit(cache=True)
def _sift_up(heap_idx, pos, pool_b, pool_c):
    while pos > 0:
        parent = (pos - 1) // 2
        child = heap_idx[pos]
        above = heap_idx[parent]
        if pool_b[child] > pool_b[above] or (
            pool_b[child] == pool_b[above] and pool_c[child] < pool_c[above]
        ):
            heap_idx[pos] = above
            heap_idx[parent] = child
            pos = parent
        else:
            break


@njit(cache=True)
def _sift_down(heap_idx, heap_size, pool_b, pool_c):
    pos = 0
    while True:
        left = 2 * pos + 1
        if left >= heap_size:
            break
        best = left
        right = left + 1
        if right < heap_size:
            a = heap_idx[right]
            b = heap_idx[left]
            if pool_b[a] > pool_b[b] or (pool_b[a] == pool_b[b] and pool_c[a] < pool_c[b]):
                best = right
        cur = heap_idx[pos]
        cand = heap_idx[best]
        if pool_b[cand] > pool_b[cur] or (
            pool_b[cand] == pool_b[cur] and pool_c[cand] < pool_c[cur]
        ):
            heap_idx[pos] = cand
            heap_idx[best] = cur
            pos = best
        else:
            break


@njit(cache=True)
def _grow_pool(pool_r, pool_s, pool_pt, pool_b, pool_c, free_idx, heap_idx):
    cap = pool_b.size
    ncap = 2 * cap
    L = pool_r.shape[1]
    nr = np.empty((ncap, L))
    ns = np.empty((ncap, L))
    npt = np.empty((ncap, L))
    nb = np.empty(ncap)
    nc = np.empty(ncap, np.int64)
    nf = np.empty(ncap, np.int64)
    nh = np.empty(ncap, np.int64)
    for i in range(cap):
        for k in range(L):
            nr[i, k] = pool_r[i, k]
            ns[i, k] = pool_s[i, k]
            npt[i, k] = pool_pt[i, k]
        nb[i] = pool_b[i]
        nc[i] = pool_c[i]
        nf[i] = free_idx[i]
        nh[i] = heap_idx[i]
    return nr, ns, npt, nb, nc, nf, nh


@njit(cache=True)
def _solve_chunk(
    pool_r,
    pool_s,
    pool_pt,
    pool_b,
    pool_c,
    pool_size,
    free_idx,
    free_size,
    heap_idx,
    heap_size,
    gamma,
    p_bar,
    counter,
    budget,
    relative,
    eps,
    alpha,
    beta_mat,
    mu,
    pc,
    w,
    kind: int,
):
    """Run up to `budget` branch steps; return 0 when the queue certifies.

    Each step pops the best box, splits it through the midpoint between
    its lower corner and bound candidate (largest-gap coordinate, falling
    back to halving the longest edge), bounds both children, folds the
    fresh corner and both candidates into the incumbent, and keeps the
    children whose bound still clears the certificate threshold.  The
    lower child inherits the parent's corner, whose objective is already
    reflected in `gamma`, so it is not re-evaluated.  `p_bar` is updated
    in place; pool arrays are returned because they may be reallocated.
    """
    L = alpha.size
    done = 0
    boxes_delta = 0
    peak = heap_size
    r_a = np.empty(L)
    s_a = np.empty(L)
    r_b = np.empty(L)
    s_b = np.empty(L)
    pt_a = np.empty(L)
    pt_b = np.empty(L)
    status = 1
    while True:
        if heap_size == 0:
            status = 0
            break
        thr = (1.0 + eps) * gamma if relative else gamma + eps
        if pool_b[heap_idx[0]] <= thr:
            status = 0  # best remaining bound is within tolerance
            break
        if done >= budget:
            break
        slot = heap_idx[0]
        heap_size -= 1
        heap_idx[0] = heap_idx[heap_size]
        _sift_down(heap_idx, heap_size, pool_b, pool_c)
        done += 1

        r = pool_r[slot]
        s = pool_s[slot]
        ptilde = pool_pt[slot]
        j = 0
        gap = -1.0
        for k in range(L):
            g = abs(ptilde[k] - r[k])
            if g > gap:
                gap = g
                j = k
        v = 0.5 * (ptilde[j] + r[j])
        if not (r[j] < v < s[j]):
            j = 0
            width = -1.0
            for k in range(L):
                wd = s[k] - r[k]
                if wd > width:
                    width = wd
                    j = k
            v = 0.5 * (r[j] + s[j])
            if not (r[j] < v < s[j]):
                # Box at floating-point resolution: exhaust it by evaluating
                # its candidate and upper corner, then recycle the slot.
                f1 = _objective_kernel(ptilde, alpha, beta_mat, mu, pc, w, kind)
                if f1 > gamma:
                    gamma = f1
                    for k in range(L):
                        p_bar[k] = ptilde[k]
                f2 = _objective_kernel(s, alpha, beta_mat, mu, pc, w, kind)
                if f2 > gamma:
                    gamma = f2
                    for k in range(L):
                        p_bar[k] = s[k]
                free_idx[free_size] = slot
                free_size += 1
                continue
        for k in range(L):
            r_a[k] = r[k]
            s_a[k] = s[k]
            r_b[k] = r[k]
            s_b[k] = s[k]
        s_a[j] = v
        r_b[j] = v

        b_a = _bound_into(r_a, s_a, alpha, beta_mat, mu, pc, w, kind, pt_a)
        boxes_delta += 1
        thr = (1.0 + eps) * gamma if relative else gamma + eps
        keep_a = False
        if b_a > thr:
            f_a = _objective_kernel(pt_a, alpha, beta_mat, mu, pc, w, kind)
            if f_a > gamma:
                gamma = f_a
                for k in range(L):
                    p_bar[k] = pt_a[k]
                thr = (1.0 + eps) * gamma if relative else gamma + eps
            keep_a = b_a > thr

        b_b = _bound_into(r_b, s_b, alpha, beta_mat, mu, pc, w, kind, pt_b)
        boxes_delta += 1
        keep_b = False
        if b_b > thr:
            f_b = _objective_kernel(r_b, alpha, beta_mat, mu, pc, w, kind)
            if f_b > gamma:
                gamma = f_b
                for k in range(L):
                    p_bar[k] = r_b[k]
            f_pb = _objective_kernel(pt_b, alpha, beta_mat, mu, pc, w, kind)
            if f_pb > gamma:
                gamma = f_pb
                for k in range(L):
                    p_bar[k] = pt_b[k]
            thr = (1.0 + eps) * gamma if relative else gamma + eps
            keep_b = b_b > thr

        # The parent's row is fully copied out, so its slot can be recycled
        # (a kept child will usually reuse it, keeping the pool near the
        # queue's size).
        free_idx[free_size] = slot
        free_size += 1
        if keep_a:
            counter += 1
            if free_size > 0:
                free_size -= 1
                slot_a = free_idx[free_size]
            else:
                if pool_size == pool_b.size:
                    (
                        pool_r,
                        pool_s,
                        pool_pt,
                        pool_b,
                        pool_c,
                        free_idx,
                        heap_idx,
                    ) = _grow_pool(pool_r, pool_s, pool_pt, pool_b, pool_c, free_idx, heap_idx)
                slot_a = pool_size
                pool_size += 1
            for k in range(L):
                pool_r[slot_a, k] = r_a[k]
                pool_s[slot_a, k] = s_a[k]
                pool_pt[slot_a, k] = pt_a[k]
            pool_b[slot_a] = b_a
            pool_c[slot_a] = counter
            heap_idx[heap_size] = slot_a
            _sift_up(heap_idx, heap_size, pool_b, pool_c)
            heap_size += 1
        if keep_b:
            counter += 1
            if free_size > 0:
                free_size -= 1
                slot_b = free_idx[free_size]
            else:
                if pool_size == pool_b.size:
                    (
                        pool_r,
                        pool_s,
                        pool_pt,
                        pool_b,
                        pool_c,
                        free_idx,
                        heap_idx,
                    ) = _grow_pool(pool_r, pool_s, pool_pt, pool_b, pool_c, free_idx, heap_idx)
                slot_b = pool_size
                pool_size += 1
            for k in range(L):
                pool_r[slot_b, k] = r_b[k]
                pool_s[slot_b, k] = s_b[k]
                pool_pt[slot_b, k] = pt_b[k]
            pool_b[slot_b] = b_b
            pool_c[slot_b] = counter
            heap_idx[heap_size] = slot_b
            _sift_up(heap_idx, heap_size, pool_b, pool_c)
            heap_size += 1
        if heap_size > peak:
            peak = heap_size
    return (
        status,
        pool_r,
        pool_s,
        pool_pt,
        pool_b,
        pool_c,
        pool_size,
        free_idx,
        free_size,
        heap_idx,
        heap_size,
        gamma,
        counter,
        done,
        boxes_delta,
        peak,
    )


# ---------------------------------------------------------------------------
# Public scalar operations
# ---------------------------------------------------------------------------


def lambert_w0(x: float) -> float:
    """Principal branch W0: the w >= -1 with ``w * exp(w) = x``.

    Accepts ``x >= -1/e`` (arguments up to ``1e-12`` below are clamped to
    the branch point) and achieves residual ``|w e^w - x| <= 1e-12 * max(1, |x|)``.
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("lambert_w0 is undefined for NaN")
    if x < _BRANCH_EDGE:
        if x >= _BRANCH_EDGE - 1e-12:
            return -1.0
        raise ValueError(f"lambert_w0 domain is x >= -1/e; got {x!r}")
    return float(_lambert_w0_kernel(x))


def ratio_max(
    alpha_tilde: float, mu: float, p_circuit: float, lo: float, hi: float
) -> Tuple[float, float]:
    """Maximize ``log2(1 + alpha_tilde * p) / (mu * p + p_circuit)`` over [lo, hi].

    Returns the maximizer and the maximum.  With ``mu == 0`` the ratio is
    increasing, so the upper endpoint wins; otherwise the interior
    stationary point ``p = (t / W0(t/e) - 1) / alpha_tilde`` with
    ``t = alpha_tilde * p_circuit / mu - 1`` is clipped into the interval
    (pseudo-concavity makes clipping exact).
    """
    if not (0.0 <= lo <= hi) or not math.isfinite(lo) or not math.isfinite(hi):
        raise ValueError(f"invalid interval [{lo!r}, {hi!r}]")
    if alpha_tilde <= 0.0 or p_circuit <= 0.0 or mu < 0.0:
        raise ValueError("need alpha_tilde > 0, p_circuit > 0, mu >= 0")
    p, v = _ratio_max_kernel(float(alpha_tilde), float(mu), float(p_circuit), float(lo), float(hi))
    return float(p), float(v)


# ---------------------------------------------------------------------------
# Boxes, tolerances, results
# ---------------------------------------------------------------------------


@dataclass
class Box:
    """An axis-aligned hyper-rectangle [r, s] of power vectors.

    Carries the cached bound value and candidate point once they have been
    computed, plus an insertion counter used for deterministic tie-breaks.
    """

    r: np.ndarray
    s: np.ndarray
    bound: float = math.nan
    candidate: Optional[np.ndarray] = None
    counter: int = 0

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float).reshape(-1)
        self.s = np.asarray(self.s, dtype=float).reshape(-1)
        if self.r.shape != self.s.shape:
            raise ValueError("box corners must have identical shapes")
        if np.any(self.r > self.s):
            raise ValueError("box requires r <= s componentwise")


@dataclass(frozen=True)
class Tolerance:
    """Optimality certificate target: absolute (gamma + eps) or relative ((1+eps) gamma)."""

    mode: str = "relative"
    eps: float = 0.01

    def __post_init__(self):
        if self.mode not in ("absolute", "relative"):
            raise ValueError("tolerance mode must be 'absolute' or 'relative'")
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise ValueError("eps must be finite and positive")

    def threshold(self, incumbent: float) -> float:
        """Bound level below which a box cannot beat the certificate."""
        if self.mode == "absolute":
            return incumbent + self.eps
        return (1.0 + self.eps) * incumbent


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a solver run."""

    p: Allocation
    value: float
    iterations: int
    boxes_created: int
    peak_queue: int
    wall_time: float
    tolerance: Optional[Tolerance]
    certified: bool = True


# ---------------------------------------------------------------------------
# Bounding and branching
# ---------------------------------------------------------------------------


def _kernel_args(inst: ProblemInstance):
    return (
        inst.alpha,
        inst.beta_matrix,
        inst.mu,
        inst.p_circuit,
        inst.weights,
    )


def bound(
    box: Box, inst: ProblemInstance, kind: Union[MetricKind, str] = MetricKind.WSEE
) -> Tuple[float, np.ndarray]:
    """Upper bound of the metric over ``box`` and the bound's candidate point.

    The candidate collects the per-link maximizers (the box's upper corner
    for WSR); the bound is exact on singleton boxes.
    """
    kind = MetricKind.parse(kind)
    if box.r.shape != (inst.L,):
        raise ValueError("box dimension does not match the instance")
    if np.any(box.r < 0) or np.any(box.s > inst.p_max * (1 + 1e-12) + 1e-300):
        raise ValueError("box must lie within [0, p_max]")
    beta_val, ptilde = _bound_kernel(box.r, box.s, *_kernel_args(inst), _KIND_CODE[kind])
    return float(beta_val), ptilde


def bisect(box: Box, p_tilde: PowerLike) -> Tuple[Box, Box]:
    """Split ``box`` through the midpoint between r and the candidate point.

    The split coordinate is the one with the largest gap ``|ptilde_j - r_j|``
    (smallest index on ties); the cut sits at ``v_j = (ptilde_j + r_j) / 2``.
    When the candidate coincides with the lower corner the rule would yield a
    zero-width cut, so the split falls back to halving the longest edge.
    """
    ptilde = as_power_vector(p_tilde)
    pieces = _split_corners(box.r, box.s, ptilde)
    if pieces is None:
        raise ValueError("box is numerically degenerate; cannot bisect")
    (r_lo, s_lo), (r_hi, s_hi) = pieces
    return Box(r_lo, s_lo), Box(r_hi, s_hi)


def _split_corners(r: np.ndarray, s: np.ndarray, ptilde: np.ndarray):
    """Corner arrays of the two children, or None when no valid cut exists."""
    L = r.size
    j = 0
    gap = -1.0
    for k in range(L):
        g = abs(ptilde[k] - r[k])
        if g > gap:
            gap = g
            j = k
    v = 0.5 * (ptilde[j] + r[j])
    if not (r[j] < v < s[j]):
        # Candidate sits on the lower corner (or the cut collapsed in floating
        # point): halve the longest edge instead.
        j = 0
        width = -1.0
        for k in range(L):
            wd = s[k] - r[k]
            if wd > width:
                width = wd
                j = k
        v = 0.5 * (r[j] + s[j])
        if not (r[j] < v < s[j]):
            return None
    s_lo = s.copy()
    s_lo[j] = v
    r_hi = r.copy()
    r_hi[j] = v
    return (r, s_lo), (r_hi, s)


# ---------------------------------------------------------------------------
# Best-first search
# ---------------------------------------------------------------------------


def solve_global(
    inst: ProblemInstance,
    kind: Union[MetricKind, str] = MetricKind.WSEE,
    tol: Tolerance = Tolerance("relative", 0.01),
    iter_cap: int = 10_000_000,
    time_cap: Optional[float] = None,
) -> SolveResult:
    """Globally maximize the metric over ``[0, p_max]`` to certified tolerance.

    Best-first branch-and-bound: pop the box with the largest cached bound,
    bisect it, bound both children, prune children whose bound cannot beat
    the incumbent's certificate threshold, and update the incumbent with each
    kept child's lower corner and bound candidate.  Terminates when the queue
    empties (certified) or when the iteration/time caps trip (returned
    flagged non-certified).

    Args:
        inst: problem data.
        kind: metric to maximize.
        tol: certificate target (absolute or relative epsilon).
        iter_cap: maximum number of branch steps.
        time_cap: optional wall-clock limit in seconds, checked between
            JIT-compiled batches of steps (roughly millisecond granularity).

    Returns:
        SolveResult with the incumbent allocation, its normalized objective
        value, and search statistics.
    """
    kind = MetricKind.parse(kind)
    kind_code = _KIND_CODE[kind]
    args = _kernel_args(inst)
    start = time.perf_counter()
    L = inst.L

    r0 = np.zeros(L)
    s0 = inst.p_max.copy()
    p_bar = r0.copy()
    gamma = float(_objective_kernel(r0, *args, kind_code))

    beta0, pt0 = _bound_kernel(r0, s0, *args, kind_code)
    f0 = float(_objective_kernel(pt0, *args, kind_code))
    if f0 > gamma:
        gamma = f0
        p_bar = pt0.copy()
    boxes_created = 1
    counter = 0
    iterations = 0
    certified = True

    cap = 1024
    pool_r = np.zeros((cap, L))
    pool_s = np.zeros((cap, L))
    pool_pt = np.zeros((cap, L))
    pool_b = np.zeros(cap)
    pool_c = np.zeros(cap, np.int64)
    free_idx = np.zeros(cap, np.int64)
    heap_idx = np.zeros(cap, np.int64)
    pool_r[0] = r0
    pool_s[0] = s0
    pool_pt[0] = pt0
    pool_b[0] = beta0
    pool_size = 1
    free_size = 0
    heap_size = 1 if beta0 > tol.threshold(gamma) else 0
    peak_queue = heap_size

    relative = tol.mode == "relative"
    eps = tol.eps
    # The kernel runs in chunks so the wall clock is observed from Python;
    # a short chunk keeps the time cap responsive when one is set.
    chunk = 1024 if time_cap is not None else 1 << 18
    while heap_size > 0:
        budget = min(chunk, iter_cap - iterations)
        (
            status,
            pool_r,
            pool_s,
            pool_pt,
            pool_b,
            pool_c,
            pool_size,
            free_idx,
            free_size,
            heap_idx,
            heap_size,
            gamma,
            counter,
            done,
            boxes_delta,
            peak,
        ) = _solve_chunk(
            pool_r,
            pool_s,
            pool_pt,
            pool_b,
            pool_c,
            pool_size,
            free_idx,
            free_size,
            heap_idx,
            heap_size,
            gamma,
            p_bar,
            counter,
            budget,
            relative,
            eps,
            *args,
            kind_code,
        )
        iterations += done
        boxes_created += boxes_delta
        if peak > peak_queue:
            peak_queue = peak
        if status == 0:
            break  # queue exhausted: the incumbent is certified
        if iterations >= iter_cap or (
            time_cap is not None and time.perf_counter() - start > time_cap
        ):
            certified = False
            break

    return SolveResult(
        p=Allocation(p_bar),
        value=gamma,
        iterations=iterations,
        boxes_created=boxes_created,
        peak_queue=peak_queue,
        wall_time=time.perf_counter() - start,
        tolerance=tol,
        certified=certified,
    )
