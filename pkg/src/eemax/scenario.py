"""Random network generation, path loss models, and labeled-dataset I/O.

Scenarios place users uniformly in a square service area covered by a
small set of multi-antenna access points.  Each user associates with the
access point where it enjoys the strongest effective channel; matched
filtering at the serving access point turns the fading vectors into the
effective gains ``alpha_i`` and cross-interference couplings ``beta_ij``
that parametrize a :class:`~eemax.model.ProblemInstance`.

Two propagation models are available: a power-law with a free-space
intercept at 1 m, and the COST-231 extension of the Hata urban model
(used here as a distribution-shift test bed, optionally with log-normal
shadowing).

Labeled samples pair the log-scaled normalized instance parameters with
log-scaled optimal powers; the CSV serialization is header-versioned and
round-trips 64-bit floats exactly via 17-significant-digit decimals.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .model import (
    PowerLike,
    ProblemInstance,
    as_power_vector,
    normalize_instance,
)

__all__ = [
    "SPEED_OF_LIGHT",
    "ScenarioConfig",
    "ChannelRealization",
    "DatasetSample",
    "pathloss_db",
    "noise_power",
    "generate_scenario",
    "assemble_instance",
    "featurize",
    "defeaturize",
    "label",
    "write_dataset",
    "read_dataset",
]

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Hata/COST-231 geometry: urban macro with a 30 m base station, 1.5 m
# terminals, and the medium-city correction (0 dB metropolitan offset).
_HATA_BASE_HEIGHT_M = 30.0
_HATA_MOBILE_HEIGHT_M = 1.5

_PATHLOSS_MODELS = ("power-law", "hata-cost231-urban")

# Users may land arbitrarily close to an access point; distances are
# floored at the 1 m reference so the path loss stays defined.
_MIN_DISTANCE_KM = 1e-3

_DEFAULT_APS = ((0.5, 0.5), (0.5, 1.5), (1.5, 0.5), (1.5, 1.5))


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry, propagation, and noise parameters of the random network."""

    L: int = 4
    area_km: float = 2.0
    ap_positions: Tuple[Tuple[float, float], ...] = _DEFAULT_APS
    n_rx: int = 2
    carrier_ghz: float = 1.8
    pathloss_model: str = "power-law"
    decay_exponent: float = 4.5
    shadowing_db: float = 0.0
    noise_figure_db: float = 3.0
    bandwidth_hz: float = 180e3
    noise_density_dbm: float = -174.0
    seed: int = 0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.n_rx < 1:
            raise ValueError("n_rx must be at least 1")
        if self.area_km <= 0:
            raise ValueError("area edge must be positive")
        if self.pathloss_model not in _PATHLOSS_MODELS:
            raise ValueError(
                f"pathloss_model must be one of {_PATHLOSS_MODELS}, got {self.pathloss_model!r}"
            )
        if len(self.ap_positions) < 1:
            raise ValueError("need at least one access point")
        if self.shadowing_db < 0:
            raise ValueError("shadowing_db must be nonnegative (0 disables)")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True)
class ChannelRealization:
    """One drawn network: geometry, fading, association, and derived gains.

    ``h`` holds the channel vector of every (access point, user) pair with
    shape (n_ap, L, n_rx); ``assignment[i]`` is the serving access point of
    user i; ``alpha``/``beta`` are the effective gains after matched
    filtering at the serving access point (``beta`` as an (L, L) matrix
    with zero diagonal).
    """

    positions: np.ndarray
    h: np.ndarray
    assignment: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray


def pathloss_db(
    distance_km: Union[float, np.ndarray], config: ScenarioConfig
) -> Union[float, np.ndarray]:
    """Path loss in dB at the given distance(s).

    The power-law model anchors a ``10 * eta * log10(d)`` slope at the
    free-space loss of the 1 m reference distance; the COST-231 Hata urban
    model uses the standard published expression with the configured
    carrier, a 30 m base antenna, a 1.5 m mobile antenna, and the
    medium-city correction.  Distances clamp to a 1 m floor so that users
    dropped on top of an access point keep a physical gain.
    """
    d = np.asarray(distance_km, dtype=float)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise ValueError("distances must be positive and finite")
    d = np.maximum(d, _MIN_DISTANCE_KM)
    if config.pathloss_model == "power-law":
        f_hz = config.carrier_ghz * 1e9
        pl0 = 20.0 * np.log10(4.0 * math.pi * 1.0 * f_hz / SPEED_OF_LIGHT)
        pl = pl0 + 10.0 * config.decay_exponent * np.log10(d * 1000.0)
    else:
        f_mhz = config.carrier_ghz * 1e3
        lf = np.log10(f_mhz)
        a_hr = (1.1 * lf - 0.7) * _HATA_MOBILE_HEIGHT_M - (1.56 * lf - 0.8)
        lhb = math.log10(_HATA_BASE_HEIGHT_M)
        pl = (
            46.3
            + 33.9 * lf
            - 13.82 * lhb
            - a_hr
            + (44.9 - 6.55 * lhb) * np.log10(d)
        )
    return float(pl) if np.isscalar(distance_km) else pl


def noise_power(config: ScenarioConfig) -> float:
    """Receiver noise power F * N0 * B in watts."""
    dbm = config.noise_density_dbm + 10.0 * math.log10(config.bandwidth_hz) + config.noise_figure_db
    return 10.0 ** (dbm / 10.0) / 1000.0


def generate_scenario(
    config: ScenarioConfig, seed: Union[int, np.random.SeedSequence, None] = None
) -> ChannelRealization:
    """Draw one network realization, deterministically for a given seed.

    Users are placed uniformly in the square; every (access point, user)
    link gets independent Rayleigh fading scaled by the linear path gain
    (plus optional log-normal shadowing); each user then associates with
    the access point holding its largest effective channel (ties to the
    smallest index).  Fading is redrawn in the astronomically unlikely
    event that some effective gain underflows to zero.
    """
    if seed is None:
        seed = config.seed
    rng = np.random.default_rng(seed)
    n_ap = len(config.ap_positions)
    L = config.L

    positions = rng.uniform(0.0, config.area_km, size=(L, 2))
    aps = np.asarray(config.ap_positions, dtype=float)
    dists = np.maximum(
        np.linalg.norm(aps[:, None, :] - positions[None, :, :], axis=2), _MIN_DISTANCE_KM
    )
    pl = pathloss_db(dists, config)
    if config.shadowing_db > 0:
        pl = pl + rng.normal(0.0, config.shadowing_db, size=(n_ap, L))
    gain = 10.0 ** (-pl / 10.0)
    sigma_sq = noise_power(config)

    for _ in range(128):
        fading = rng.standard_normal((n_ap, L, config.n_rx)) + 1j * rng.standard_normal(
            (n_ap, L, config.n_rx)
        )
        h = np.sqrt(gain / 2.0)[:, :, None] * fading
        eff = np.sum(np.abs(h) ** 2, axis=2)  # ||h_{m,j}||^2, shape (n_ap, L)
        assignment = np.argmax(eff, axis=0)
        own = eff[assignment, np.arange(L)]
        alpha = own / sigma_sq
        if np.all(alpha > 1e-30):
            break
    else:
        raise RuntimeError("could not draw a realization with strictly positive gains")

    beta = np.zeros((L, L))
    for i in range(L):
        hi = h[assignment[i], i]
        for j in range(L):
            if j == i:
                continue
            cross = np.vdot(hi, h[assignment[i], j])
            beta[i, j] = float(np.abs(cross) ** 2 / (sigma_sq * own[i]))
    return ChannelRealization(
        positions=positions, h=h, assignment=assignment, alpha=alpha, beta=beta
    )


def assemble_instance(
    real: ChannelRealization,
    p_max_dbw: float,
    mu: Union[float, Sequence[float]] = 4.0,
    p_circuit: Union[float, Sequence[float]] = 1.0,
    weights: Optional[Sequence[float]] = None,
    bandwidth: float = 180e3,
) -> ProblemInstance:
    """Turn a realization into a ProblemInstance with a shared power budget."""
    if not math.isfinite(p_max_dbw):
        raise ValueError("p_max_dbw must be finite")
    L = real.alpha.size
    p_max = np.full(L, 10.0 ** (p_max_dbw / 10.0))
    return ProblemInstance.from_matrix(
        alpha=real.alpha,
        beta_matrix=real.beta,
        p_max=p_max,
        mu=np.broadcast_to(np.asarray(mu, dtype=float), (L,)),
        p_circuit=np.broadcast_to(np.asarray(p_circuit, dtype=float), (L,)),
        weights=weights,
        bandwidth=bandwidth,
    )


def featurize(inst: ProblemInstance, clip_m: float = 20.0) -> np.ndarray:
    """Log-scaled parameter vector of the (normalized) instance.

    Concatenates ``log10(alpha_i P_i)`` (L entries), ``log10(beta_ij P_j)``
    in row-major order skipping the diagonal (L(L-1) entries, clipped up to
    ``-clip_m`` so vanishing couplings stay finite), and ``log10(P_i)``
    (L entries).  Normalization is idempotent, so raw and pre-normalized
    instances produce the same gain features; the power block carries the
    instance's own budgets.
    """
    if clip_m <= 0:
        raise ValueError("clip_m must be positive")
    nrm = normalize_instance(inst)
    with np.errstate(divide="ignore"):
        beta_feat = np.maximum(-clip_m, np.log10(nrm.beta))
    feats = np.concatenate([np.log10(nrm.alpha), beta_feat, np.log10(inst.p_max)])
    if not np.all(np.isfinite(feats)):
        raise ValueError("features must be finite; check instance gains")
    return feats


def defeaturize(
    features: np.ndarray,
    L: int,
    mu: Union[float, Sequence[float]] = 4.0,
    p_circuit: Union[float, Sequence[float]] = 1.0,
    weights: Optional[Sequence[float]] = None,
    bandwidth: float = 180e3,
) -> ProblemInstance:
    """Rebuild a ProblemInstance from a feature vector.

    Inverts :func:`featurize` up to the clipping of vanishing couplings;
    amplifier and circuit parameters are not part of the features and must
    be supplied.
    """
    features = np.asarray(features, dtype=float).reshape(-1)
    if features.shape != (L * (L + 1),):
        raise ValueError(f"expected {L * (L + 1)} features for L={L}, got {features.size}")
    alpha_tilde = 10.0 ** features[:L]
    beta_tilde = 10.0 ** features[L : L + L * (L - 1)]
    p_max = 10.0 ** features[L + L * (L - 1) :]
    alpha = alpha_tilde / p_max
    beta_mat = np.zeros((L, L))
    if L > 1:
        off = ~np.eye(L, dtype=bool)
        beta_mat[off] = beta_tilde
        beta_mat = beta_mat / p_max[None, :]
    return ProblemInstance.from_matrix(
        alpha=alpha,
        beta_matrix=beta_mat,
        p_max=p_max,
        mu=np.broadcast_to(np.asarray(mu, dtype=float), (L,)),
        p_circuit=np.broadcast_to(np.asarray(p_circuit, dtype=float), (L,)),
        weights=weights,
        bandwidth=bandwidth,
    )


def label(p_star: PowerLike, inst: ProblemInstance, clip_m: float = 20.0) -> np.ndarray:
    """Clipped log-scaled normalized powers: ``max(-clip_m, log10(p_i / P_i))``."""
    p = as_power_vector(p_star)
    if p.shape != (inst.L,):
        raise ValueError("power vector length does not match the instance")
    ptilde = p / inst.p_max
    if np.any(ptilde < 0) or np.any(ptilde > 1.0 + 1e-12):
        raise ValueError("powers must lie in [0, p_max]")
    with np.errstate(divide="ignore"):
        return np.maximum(-clip_m, np.log10(np.minimum(ptilde, 1.0)))


@dataclass(frozen=True)
class DatasetSample:
    """A labeled training point: features, optimal-power labels, metadata."""

    channel_id: int
    pmax_dbw: float
    features: np.ndarray
    labels: np.ndarray
    objective: float

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float).reshape(-1)
        labels = np.asarray(self.labels, dtype=float).reshape(-1)
        L = labels.size
        if features.size != L * (L + 1):
            raise ValueError(
                f"feature/label lengths inconsistent: {features.size} features for {L} labels"
            )
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        if not np.all(np.isfinite(labels)) or np.any(labels > 0):
            raise ValueError("labels must be finite log-powers <= 0")
        if int(self.channel_id) < 0:
            raise ValueError("channel_id must be nonnegative")
        if not math.isfinite(float(self.pmax_dbw)) or not math.isfinite(float(self.objective)):
            raise ValueError("pmax_dbw and objective must be finite")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "channel_id", int(self.channel_id))
        object.__setattr__(self, "pmax_dbw", float(self.pmax_dbw))
        object.__setattr__(self, "objective", float(self.objective))

    @property
    def L(self) -> int:
        return self.labels.size


DATASET_FORMAT_VERSION = 1


def _dataset_header(L: int) -> List[str]:
    return (
        ["version", "L", "channel_id", "pmax_dbw"]
        + [f"feat_{k}" for k in range(L * (L + 1))]
        + [f"label_{k}" for k in range(L)]
        + ["objective"]
    )


def _fmt(x: float) -> str:
    """17 significant digits: enough for a bit-exact float64 round trip."""
    return format(float(x), ".17g")


def write_dataset(samples: Iterable[DatasetSample], path: str) -> None:
    """Serialize samples to a headered CSV file (atomically replaced)."""
    samples = list(samples)
    L = samples[0].L if samples else 0
    if any(s.L != L for s in samples):
        raise ValueError("all samples in a dataset must share the same L")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".dataset-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(_dataset_header(L))
            for s in samples:
                writer.writerow(
                    [DATASET_FORMAT_VERSION, s.L, s.channel_id, _fmt(s.pmax_dbw)]
                    + [_fmt(v) for v in s.features]
                    + [_fmt(v) for v in s.labels]
                    + [_fmt(s.objective)]
                )
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_dataset(path: str) -> List[DatasetSample]:
    """Parse a dataset CSV, validating header schema, version, and row shapes."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        n_labels = sum(1 for name in header if name.startswith("label_"))
        if header != _dataset_header(n_labels):
            raise ValueError(f"{path}: unrecognized dataset schema {header[:6]}...")
        n_feat = n_labels * (n_labels + 1)
        expected_cols = len(header)
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != expected_cols:
                raise ValueError(
                    f"{path}:{lineno}: expected {expected_cols} columns, found {len(row)}"
                )
            version = int(row[0])
            if version != DATASET_FORMAT_VERSION:
                raise ValueError(
                    f"{path}:{lineno}: version {version} unsupported "
                    f"(expected {DATASET_FORMAT_VERSION})"
                )
            L = int(row[1])
            if L != n_labels:
                raise ValueError(f"{path}:{lineno}: row L={L} conflicts with header L={n_labels}")
            values = [float(v) for v in row[3:]]
            samples.append(
                DatasetSample(
                    channel_id=int(row[2]),
                    pmax_dbw=values[0],
                    features=np.array(values[1 : 1 + n_feat]),
                    labels=np.array(values[1 + n_feat : 1 + n_feat + n_labels]),
                    objective=values[-1],
                )
            )
    return samples
