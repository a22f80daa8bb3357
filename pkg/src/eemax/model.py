"""Problem data model for energy-efficient power control in interference networks.

A network of ``L`` interfering links is summarized by effective channel
gains ``alpha_i`` (signal-to-noise ratio per unit transmit power), cross
interference coefficients ``beta_ij``, per-link power budgets, amplifier
inefficiencies, and static circuit powers.  The achievable rate of link
``i`` under a power vector ``p`` is

    R_i(p) = B * log2(1 + alpha_i p_i / (1 + sum_{j != i} beta_ij p_j))

and its energy efficiency is the benefit-cost ratio
``EE_i = R_i / (mu_i p_i + Pc_i)``.  This module holds the instance
containers, the five scalarized objectives built from these quantities,
the weighted-sum-EE gradient, the unit-power-budget change of variables,
and two fixed baseline allocations.

All optimization code works on the *normalized* (bandwidth-free) rates;
the bandwidth ``B`` only rescales reported values and never moves a
maximizer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

LN2 = math.log(2.0)

__all__ = [
    "LN2",
    "MetricKind",
    "ProblemInstance",
    "Allocation",
    "beta_flat_index",
    "beta_flat_to_matrix",
    "beta_matrix_to_flat",
    "as_power_vector",
    "sinr",
    "rate",
    "ee_link",
    "objective",
    "grad_wsee",
    "normalize_instance",
    "baseline",
]


class MetricKind(enum.Enum):
    """The supported scalarized objectives."""

    WSEE = "wsee"  # weighted sum of per-link energy efficiencies
    GEE = "gee"  # global EE: total rate over total consumed power
    WPEE = "wpee"  # weighted product of per-link energy efficiencies
    WMEE = "wmee"  # weighted minimum per-link energy efficiency
    WSR = "wsr"  # weighted sum rate

    @classmethod
    def parse(cls, name: Union[str, "MetricKind"]) -> "MetricKind":
        if isinstance(name, MetricKind):
            return name
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown metric {name!r}; expected one of: {valid}") from None


def beta_flat_index(L: int, i: int, j: int) -> int:
    """Position of the cross gain (i, j), i != j, in the flat row-major layout."""
    if i == j:
        raise ValueError("diagonal entries are not stored")
    return i * (L - 1) + (j if j < i else j - 1)


def beta_flat_to_matrix(L: int, flat: np.ndarray) -> np.ndarray:
    """Expand the flat cross-gain vector into an (L, L) matrix with zero diagonal."""
    flat = np.asarray(flat, dtype=float)
    if flat.shape != (L * (L - 1),):
        raise ValueError(f"expected {L * (L - 1)} cross gains, got shape {flat.shape}")
    mat = np.zeros((L, L))
    if L > 1:
        off = ~np.eye(L, dtype=bool)
        mat[off] = flat
    return mat


def beta_matrix_to_flat(mat: np.ndarray) -> np.ndarray:
    """Flatten an (L, L) cross-gain matrix row-major, skipping the diagonal."""
    mat = np.asarray(mat, dtype=float)
    L = mat.shape[0]
    if mat.shape != (L, L):
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    return mat[~np.eye(L, dtype=bool)].copy()


def _frozen_array(values, length: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.shape != (length,):
        raise ValueError(f"{name} must have length {length}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable description of one power-control problem.

    Fields
    ------
    L:
        number of links.
    alpha:
        per-link effective channel-to-noise ratio (linear, > 0), length L.
    beta:
        cross-interference coefficients ``beta_ij`` for ``i != j`` (linear,
        >= 0), stored flat in row-major order skipping the diagonal; exactly
        ``L*(L-1)`` entries.
    p_max:
        per-link maximum transmit power in watts (> 0).
    mu:
        per-link amplifier inefficiency (>= 0, dimensionless).
    p_circuit:
        per-link static circuit power in watts (> 0), so every EE
        denominator stays positive even at p = 0.
    weights:
        per-link priorities (>= 0); defaults to all ones.
    bandwidth:
        communication bandwidth B in hertz; reporting scale only.
    """

    L: int
    alpha: np.ndarray
    beta: np.ndarray
    p_max: np.ndarray
    mu: np.ndarray
    p_circuit: np.ndarray
    weights: np.ndarray = None  # type: ignore[assignment]
    bandwidth: float = 180e3

    def __post_init__(self):
        L = int(self.L)
        if L < 1:
            raise ValueError("L must be a positive integer")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "alpha", _frozen_array(self.alpha, L, "alpha"))
        beta = np.array(self.beta, dtype=float).reshape(-1)
        if beta.shape != (L * (L - 1),):
            raise ValueError(
                f"beta must hold exactly L*(L-1) = {L * (L - 1)} entries, got {beta.size}"
            )
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta must be finite")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "p_max", _frozen_array(self.p_max, L, "p_max"))
        object.__setattr__(self, "mu", _frozen_array(self.mu, L, "mu"))
        object.__setattr__(self, "p_circuit", _frozen_array(self.p_circuit, L, "p_circuit"))
        weights = np.ones(L) if self.weights is None else self.weights
        object.__setattr__(self, "weights", _frozen_array(weights, L, "weights"))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

        if np.any(self.alpha <= 0):
            raise ValueError("all alpha_i must be strictly positive")
        if np.any(beta < 0):
            raise ValueError("beta entries must be nonnegative")
        if np.any(self.p_max <= 0):
            raise ValueError("p_max entries must be strictly positive")
        if np.any(self.mu < 0):
            raise ValueError("mu entries must be nonnegative")
        if np.any(self.p_circuit <= 0):
            raise ValueError("p_circuit entries must be strictly positive")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")

    @classmethod
    def from_matrix(
        cls,
        alpha,
        beta_matrix,
        p_max,
        mu,
        p_circuit,
        weights=None,
        bandwidth: float = 180e3,
    ) -> "ProblemInstance":
        """Build an instance from a full (L, L) cross-gain matrix (diagonal ignored)."""
        alpha = np.asarray(alpha, dtype=float).reshape(-1)
        L = alpha.size
        return cls(
            L=L,
            alpha=alpha,
            beta=beta_matrix_to_flat(np.asarray(beta_matrix, dtype=float)),
            p_max=p_max,
            mu=mu,
            p_circuit=p_circuit,
            weights=weights,
            bandwidth=bandwidth,
        )

    @cached_property
    def beta_matrix(self) -> np.ndarray:
        """Cross gains as an (L, L) matrix with zero diagonal (read-only)."""
        mat = beta_flat_to_matrix(self.L, self.beta)
        mat.setflags(write=False)
        return mat

    def with_p_max(self, p_max) -> "ProblemInstance":
        """A copy of this instance with a different power budget."""
        p_max = np.broadcast_to(np.asarray(p_max, dtype=float), (self.L,))
        return replace(self, p_max=np.array(p_max))


@dataclass(frozen=True)
class Allocation:
    """A transmit power vector, in watts."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        if not np.all(np.isfinite(p)):
            raise ValueError("powers must be finite")
        if np.any(p < 0.0):
            raise ValueError("powers must be nonnegative")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def feasible_for(self, inst: ProblemInstance, slack: float = 0.0) -> bool:
        return (
            self.p.shape == (inst.L,)
            and bool(np.all(self.p >= -slack))
            and bool(np.all(self.p <= inst.p_max + slack))
        )


PowerLike = Union[Allocation, np.ndarray, Sequence[float], Iterable[float]]


def as_power_vector(p: PowerLike) -> np.ndarray:
    """Accept an Allocation or any array-like and return a float vector."""
    if isinstance(p, Allocation):
        return p.p
    return np.asarray(p, dtype=float).reshape(-1)


def _interference(pvec: np.ndarray, inst: ProblemInstance) -> np.ndarray:
    """Noise-normalized interference-plus-noise terms 1 + sum_j beta_ij p_j."""
    return 1.0 + inst.beta_matrix @ pvec


def sinr(p: PowerLike, inst: ProblemInstance, i: int) -> float:
    """Signal-to-interference-plus-noise ratio of link ``i`` under powers ``p``."""
    pvec = as_power_vector(p)
    if not 0 <= i < inst.L:
        raise IndexError(f"link index {i} out of range for L={inst.L}")
    return float(inst.alpha[i] * pvec[i] / _interference(pvec, inst)[i])


def rate(p: PowerLike, inst: ProblemInstance, i: int, normalized: bool = True) -> float:
    """Achievable rate of link ``i``: bits/s/Hz when normalized, bits/s otherwise."""
    r = math.log2(1.0 + sinr(p, inst, i))
    return r if normalized else inst.bandwidth * r


def ee_link(p: PowerLike, inst: ProblemInstance, i: int, normalized: bool = True) -> float:
    """Energy efficiency of link ``i``: its rate over its consumed power."""
    pvec = as_power_vector(p)
    r = rate(pvec, inst, i, normalized=normalized)
    return r / float(inst.mu[i] * pvec[i] + inst.p_circuit[i])


def _rates_and_denoms(pvec: np.ndarray, inst: ProblemInstance):
    inter = _interference(pvec, inst)
    rates = np.log2(1.0 + inst.alpha * pvec / inter)
    denoms = inst.mu * pvec + inst.p_circuit
    return rates, denoms


def objective(
    p: PowerLike,
    inst: ProblemInstance,
    kind: Union[MetricKind, str],
    normalized: bool = True,
) -> float:
    """Evaluate the selected metric at ``p``.

    WSEE is the weighted sum of per-link EEs, GEE the total rate over total
    consumed power (weights ignored), WPEE the weighted product and WMEE the
    weighted minimum of per-link EEs, and WSR the weighted sum rate (the WSEE
    with ``mu = 0`` and unit static power, applied to the formula without
    mutating the instance).
    """
    kind = MetricKind.parse(kind)
    pvec = as_power_vector(p)
    rates, denoms = _rates_and_denoms(pvec, inst)
    if not normalized:
        rates = inst.bandwidth * rates
    w = inst.weights
    if kind is MetricKind.WSEE:
        return float(np.sum(w * rates / denoms))
    if kind is MetricKind.GEE:
        return float(np.sum(rates) / np.sum(denoms))
    if kind is MetricKind.WPEE:
        # 0**0 == 1, so zero-EE links with zero weight contribute a neutral factor.
        return float(np.prod(np.power(rates / denoms, w)))
    if kind is MetricKind.WMEE:
        return float(np.min(w * rates / denoms))
    if kind is MetricKind.WSR:
        return float(np.sum(w * rates))
    raise AssertionError(f"unhandled metric {kind}")


def grad_wsee(p: PowerLike, inst: ProblemInstance) -> np.ndarray:
    """Gradient of the normalized weighted-sum-EE objective at ``p``.

    Component ``i`` collects the link's own benefit and cost sensitivities
    plus the interference it inflicts on every other link:

        w_i (dR_i/dp_i / D_i - mu_i R_i / D_i^2) + sum_{j != i} w_j (dR_j/dp_i) / D_j

    with ``D_k = mu_k p_k + Pc_k`` and normalized (bandwidth-free) rates.
    """
    pvec = as_power_vector(p)
    inter = _interference(pvec, inst)
    sig = inst.alpha * pvec
    rates = np.log2(1.0 + sig / inter)
    denoms = inst.mu * pvec + inst.p_circuit
    w = inst.weights
    own = inst.alpha / ((inter + sig) * LN2)
    # dR_j/dp_i = -beta_ji * alpha_j p_j / (I_j (I_j + alpha_j p_j) ln 2) for j != i.
    cross = w * sig / (inter * (inter + sig) * LN2 * denoms)
    return w * (own / denoms - inst.mu * rates / denoms**2) - inst.beta_matrix.T @ cross


def normalize_instance(inst: ProblemInstance) -> ProblemInstance:
    """Change of variables p_i = P_i * ptilde_i, yielding unit power budgets.

    The returned instance has ``alpha_i' = alpha_i P_i``,
    ``beta_ij' = beta_ij P_j``, ``mu_i' = mu_i P_i`` and unit ``p_max``;
    optimizing it and rescaling by ``P_i`` reproduces the original optimum.
    """
    scaled_beta = inst.beta_matrix * inst.p_max[np.newaxis, :]
    return ProblemInstance(
        L=inst.L,
        alpha=inst.alpha * inst.p_max,
        beta=beta_matrix_to_flat(scaled_beta),
        p_max=np.ones(inst.L),
        mu=inst.mu * inst.p_max,
        p_circuit=inst.p_circuit,
        weights=inst.weights,
        bandwidth=inst.bandwidth,
    )


def baseline(inst: ProblemInstance, kind: str) -> Allocation:
    """Fixed reference allocations.

    ``max-power`` transmits every link at its budget.  ``best-only``
    silences all links except the one with the largest ``alpha`` (ties to
    the smallest index), which transmits its single-link EE-optimal power
    clipped to its budget.
    """
    if kind == "max-power":
        return Allocation(inst.p_max.copy())
    if kind == "best-only":
        from .branch_bound import ratio_max

        j = int(np.argmax(inst.alpha))
        p = np.zeros(inst.L)
        p[j], _ = ratio_max(
            float(inst.alpha[j]),
            float(inst.mu[j]),
            float(inst.p_circuit[j]),
            0.0,
            float(inst.p_max[j]),
        )
        return Allocation(p)
    raise ValueError(f"unknown baseline {kind!r}; expected 'max-power' or 'best-only'")
