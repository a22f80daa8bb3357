"""From-scratch feedforward network mapping channel features to powers.

The network is a plain fully-connected stack (ELU/ReLU hidden units, a
linear output layer) trained with mean squared error, backpropagation,
and an Adam-with-Nesterov-momentum optimizer.  Inputs are the log-scaled
normalized instance parameters produced by
:func:`eemax.scenario.featurize`; outputs are log-scaled normalized
powers, so predictions are clipped into ``[-M, 0]``, exponentiated, and
rescaled by the power budgets — every prediction is feasible by
construction.

Training exploits the user-relabeling invariance of the power-control
problem: each mini-batch can be passed through a fresh random user
permutation, multiplying the effective diversity of the dataset without
touching its size.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .model import Allocation, MetricKind, ProblemInstance, beta_flat_index, objective
from .scenario import DatasetSample, defeaturize, featurize

__all__ = [
    "Mlp",
    "TrainConfig",
    "EvalStats",
    "NadamState",
    "architecture",
    "init",
    "forward",
    "loss_and_grad",
    "optimizer_step",
    "permutation_index_maps",
    "augment_permute",
    "train",
    "predict_powers",
    "evaluate",
    "save_model",
    "load_model",
]

_ACTIVATIONS = ("elu", "relu", "linear")

MODEL_FORMAT_VERSION = 1


@dataclass
class Mlp:
    """Layer sizes, per-layer parameters, and activation tags.

    ``sizes`` has K+2 entries (input, K hidden, output); ``weights[k]`` is
    the (sizes[k+1], sizes[k]) matrix feeding layer k+1, ``biases[k]`` its
    bias vector, and ``activations[k]`` its elementwise nonlinearity.  The
    output layer is always linear.
    """

    sizes: Tuple[int, ...]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activations: Tuple[str, ...]

    def __post_init__(self):
        self.sizes = tuple(int(n) for n in self.sizes)
        self.activations = tuple(self.activations)
        n_layers = len(self.sizes) - 1
        if n_layers < 1:
            raise ValueError("need at least one layer")
        if len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise ValueError("parameter lists must match the number of layers")
        if len(self.activations) != n_layers:
            raise ValueError("need one activation tag per layer")
        for tag in self.activations:
            if tag not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {tag!r}")
        if self.activations[-1] != "linear":
            raise ValueError("the output layer must use the linear activation")
        for k in range(n_layers):
            if self.weights[k].shape != (self.sizes[k + 1], self.sizes[k]):
                raise ValueError(f"weight {k} has shape {self.weights[k].shape}")
            if self.biases[k].shape != (self.sizes[k + 1],):
                raise ValueError(f"bias {k} has shape {self.biases[k].shape}")

    @property
    def n_inputs(self) -> int:
        return self.sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.sizes[-1]


def architecture(L: int, variant: str = "standard") -> Tuple[Tuple[int, ...], Tuple[str, ...]]:
    """Reference layer layouts for a given link count.

    ``standard``: hidden sizes 128/64/32/16/8, ELU on the first hidden
    layer and then alternating ReLU/ELU.  ``small``: hidden sizes 16/8
    (ELU, ReLU).  ``deep-wide``: hidden sizes 1024/4096/1024/512/256/128/
    64/32/16 with ELU on the first and last hidden layers and ReLU
    elsewhere — sized for larger networks (seven or more links).
    """
    n_in = L * (L + 1)
    if variant == "standard":
        hidden = (128, 64, 32, 16, 8)
        acts = ("elu", "relu", "elu", "relu", "elu")
    elif variant == "small":
        hidden = (16, 8)
        acts = ("elu", "relu")
    elif variant == "deep-wide":
        hidden = (1024, 4096, 1024, 512, 256, 128, 64, 32, 16)
        acts = ("elu",) + ("relu",) * (len(hidden) - 2) + ("elu",)
    else:
        raise ValueError(f"unknown architecture variant {variant!r}")
    return (n_in, *hidden, L), (*acts, "linear")


def init(
    sizes: Sequence[int], activations: Sequence[str], seed: Union[int, None] = 0
) -> Mlp:
    """Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases."""
    rng = np.random.default_rng(seed)
    sizes = tuple(int(n) for n in sizes)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(sizes=sizes, weights=weights, biases=biases, activations=tuple(activations))


def _activate(z: np.ndarray, tag: str) -> np.ndarray:
    if tag == "elu":
        return np.where(z >= 0.0, z, np.expm1(np.minimum(z, 0.0)))
    if tag == "relu":
        return np.maximum(z, 0.0)
    return z


def _activate_prime(z: np.ndarray, tag: str) -> np.ndarray:
    if tag == "elu":
        # Continuous at 0: derivative 1 there.
        return np.where(z >= 0.0, 1.0, np.exp(np.minimum(z, 0.0)))
    if tag == "relu":
        return (z > 0.0).astype(float)
    return np.ones_like(z)


def _forward_cached(mlp: Mlp, X: np.ndarray):
    """All pre-activations and activations, for backpropagation."""
    pre = []
    act = [X]
    a = X
    for W, b, tag in zip(mlp.weights, mlp.biases, mlp.activations):
        z = a @ W.T + b
        a = _activate(z, tag)
        pre.append(z)
        act.append(a)
    return pre, act


def forward(mlp: Mlp, x: np.ndarray) -> np.ndarray:
    """Network output for a single feature vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != mlp.n_inputs:
        raise ValueError(f"expected {mlp.n_inputs} inputs, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs must be finite")
    _, act = _forward_cached(mlp, X)
    out = act[-1]
    return out[0] if single else out


def loss_and_grad(mlp: Mlp, x_batch: np.ndarray, y_batch: np.ndarray):
    """Mean squared error over the batch and its parameter gradients.

    The loss averages squared differences over both batch rows and output
    coordinates; gradients come from reverse accumulation with the ELU
    subgradient at 0 taken as 1 and the ReLU subgradient at 0 as 0.
    """
    X = np.atleast_2d(np.asarray(x_batch, dtype=float))
    Y = np.atleast_2d(np.asarray(y_batch, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("feature and target batches must have equal lengths")
    pre, act = _forward_cached(mlp, X)
    diff = act[-1] - Y
    n_terms = diff.size
    loss = float(np.sum(diff * diff) / n_terms)

    n_layers = len(mlp.weights)
    grads_w: List[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    grads_b: List[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    delta = (2.0 / n_terms) * diff  # output layer is linear
    for k in range(n_layers - 1, -1, -1):
        grads_w[k] = delta.T @ act[k]
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ mlp.weights[k]) * _activate_prime(pre[k - 1], mlp.activations[k - 1])
    return loss, (grads_w, grads_b)


@dataclass
class NadamState:
    """First/second-moment accumulators and the step counter."""

    t: int
    m_w: List[np.ndarray]
    v_w: List[np.ndarray]
    m_b: List[np.ndarray]
    v_b: List[np.ndarray]

    @classmethod
    def for_model(cls, mlp: Mlp) -> "NadamState":
        return cls(
            t=0,
            m_w=[np.zeros_like(W) for W in mlp.weights],
            v_w=[np.zeros_like(W) for W in mlp.weights],
            m_b=[np.zeros_like(b) for b in mlp.biases],
            v_b=[np.zeros_like(b) for b in mlp.biases],
        )


def optimizer_step(
    mlp: Mlp,
    grads,
    state: NadamState,
    lr: float = 0.002,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-7,
) -> NadamState:
    """One Adam-with-Nesterov-momentum update, in place.

    With step count t (starting at 1), moments m and v, and gradient g:

        m <- beta1 m + (1 - beta1) g          v <- beta2 v + (1 - beta2) g^2
        mhat = m / (1 - beta1^t)              vhat = v / (1 - beta2^t)
        theta <- theta - lr * (beta1 mhat + (1 - beta1) g / (1 - beta1^t))
                       / (sqrt(vhat) + eps)

    The look-ahead term ``beta1 mhat + (1 - beta1) ghat`` substitutes the
    next step's momentum estimate for plain Adam's mhat.
    """
    grads_w, grads_b = grads
    state.t += 1
    t = state.t
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for params, gs, ms, vs in (
        (mlp.weights, grads_w, state.m_w, state.v_w),
        (mlp.biases, grads_b, state.m_b, state.v_b),
    ):
        for k in range(len(params)):
            g = gs[k]
            ms[k] *= beta1
            ms[k] += (1.0 - beta1) * g
            vs[k] *= beta2
            vs[k] += (1.0 - beta2) * g * g
            mhat = ms[k] / bc1
            vhat = vs[k] / bc2
            params[k] -= lr * (beta1 * mhat + (1.0 - beta1) / bc1 * g) / (np.sqrt(vhat) + eps)
    return state


def permutation_index_maps(L: int, sigma: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Column index maps realizing a user relabeling on features and labels.

    Returns ``(feat_idx, label_idx)`` such that ``x[feat_idx]`` is the
    feature vector of the instance whose new user i is old user sigma(i),
    and ``y[label_idx]`` the correspondingly relabeled powers.
    """
    sigma = np.asarray(sigma, dtype=int)
    if sorted(sigma.tolist()) != list(range(L)):
        raise ValueError(f"sigma must be a permutation of 0..{L - 1}")
    feat_idx = np.empty(L * (L + 1), dtype=int)
    feat_idx[:L] = sigma
    base = L
    for i in range(L):
        for j in range(L):
            if j == i:
                continue
            feat_idx[base + beta_flat_index(L, i, j)] = base + beta_flat_index(
                L, int(sigma[i]), int(sigma[j])
            )
    power_base = L + L * (L - 1)
    feat_idx[power_base:] = power_base + sigma
    return feat_idx, sigma.copy()


def augment_permute(sample: DatasetSample, sigma: Sequence[int]) -> DatasetSample:
    """Relabel the sample's users by ``sigma`` (features and labels; metadata kept)."""
    feat_idx, label_idx = permutation_index_maps(sample.L, sigma)
    return DatasetSample(
        channel_id=sample.channel_id,
        pmax_dbw=sample.pmax_dbw,
        features=sample.features[feat_idx],
        labels=sample.labels[label_idx],
        objective=sample.objective,
    )


@dataclass(frozen=True)
class TrainConfig:
    """Optimization schedule for :func:`train`."""

    epochs: int = 200
    batch_size: int = 128
    lr: float = 0.002
    lr_decay: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    shuffle: bool = True
    augment: bool = True
    seed: int = 0
    clip_m: float = 20.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError("lr_decay must lie in (0, 1]")


def _stack(samples: Sequence[DatasetSample]) -> Tuple[np.ndarray, np.ndarray]:
    X = np.stack([s.features for s in samples])
    Y = np.stack([s.labels for s in samples])
    return X, Y


def _mse(mlp: Mlp, X: np.ndarray, Y: np.ndarray) -> float:
    diff = forward(mlp, X) - Y
    return float(np.mean(diff * diff))


def train(
    mlp: Mlp,
    train_set: Sequence[DatasetSample],
    val_set: Sequence[DatasetSample],
    cfg: TrainConfig = TrainConfig(),
) -> Tuple[Mlp, np.ndarray]:
    """Mini-batch training loop; returns a trained copy and the loss history.

    Per epoch: shuffle, split into batches, optionally push each batch
    through a fresh random user permutation, and take one optimizer step
    per batch.  The learning rate shrinks by a constant factor per epoch
    when ``lr_decay`` < 1.  The history has one row per epoch with the
    mean squared error on the un-augmented training and validation sets.
    Deterministic for a fixed (seed, data, config) triple.
    """
    if not train_set:
        raise ValueError("training set must be nonempty")
    X, Y = _stack(train_set)
    L = train_set[0].L
    if X.shape[1] != mlp.n_inputs or Y.shape[1] != mlp.n_outputs:
        raise ValueError(
            f"dataset dimensions ({X.shape[1]} -> {Y.shape[1]}) do not match "
            f"the network ({mlp.n_inputs} -> {mlp.n_outputs})"
        )
    Xv, Yv = _stack(val_set) if val_set else (None, None)

    net = copy.deepcopy(mlp)
    state = NadamState.for_model(net)
    rng = np.random.default_rng(cfg.seed)
    n = X.shape[0]
    history = np.empty((cfg.epochs, 2))

    for epoch in range(cfg.epochs):
        lr = cfg.lr * cfg.lr_decay**epoch
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            Xb, Yb = X[idx], Y[idx]
            if cfg.augment:
                sigma = rng.permutation(L)
                feat_idx, label_idx = permutation_index_maps(L, sigma)
                Xb = Xb[:, feat_idx]
                Yb = Yb[:, label_idx]
            _, grads = loss_and_grad(net, Xb, Yb)
            optimizer_step(net, grads, state, lr, cfg.beta1, cfg.beta2, cfg.eps)
        history[epoch, 0] = _mse(net, X, Y)
        history[epoch, 1] = _mse(net, Xv, Yv) if Xv is not None else math.nan
        if not np.isfinite(history[epoch, 0]):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
    return net, history


def predict_powers(mlp: Mlp, inst: ProblemInstance, clip_m: float = 20.0) -> Allocation:
    """Predicted allocation: clip log-outputs to [-M, 0], exponentiate, rescale.

    Clipping keeps every prediction inside [0, p_max] whatever the raw
    network output.
    """
    feats = featurize(inst, clip_m)
    out = forward(mlp, feats)
    log_p = np.clip(out, -clip_m, 0.0)
    return Allocation(10.0**log_p * inst.p_max)


@dataclass(frozen=True)
class EvalStats:
    """Relative-error summary of a model against labeled optima."""

    errors: np.ndarray
    mean: float
    median: float
    cdf_x: np.ndarray
    cdf_y: np.ndarray
    skipped: int


def evaluate(
    mlp: Mlp,
    samples: Sequence[DatasetSample],
    kind: Union[MetricKind, str] = MetricKind.WSEE,
    mu: Union[float, Sequence[float]] = 4.0,
    p_circuit: Union[float, Sequence[float]] = 1.0,
    bandwidth: float = 180e3,
    clip_m: float = 20.0,
) -> EvalStats:
    """Per-sample relative objective error |f* - f(p_hat)| / f*.

    Instances are rebuilt from the stored features (amplifier/circuit
    parameters supplied here, as they are not part of the features);
    samples with a zero optimal objective are skipped and counted.
    """
    kind = MetricKind.parse(kind)
    errors = []
    skipped = 0
    for s in samples:
        if s.objective == 0.0:
            skipped += 1
            continue
        inst = defeaturize(s.features, s.L, mu=mu, p_circuit=p_circuit, bandwidth=bandwidth)
        pred = predict_powers(mlp, inst, clip_m)
        f_hat = objective(pred, inst, kind)
        errors.append(abs(s.objective - f_hat) / s.objective)
    errors = np.asarray(errors)
    if errors.size:
        cdf_x = np.sort(errors)
        cdf_y = np.arange(1, errors.size + 1) / errors.size
        mean = float(errors.mean())
        median = float(np.median(errors))
    else:
        cdf_x = np.empty(0)
        cdf_y = np.empty(0)
        mean = math.nan
        median = math.nan
    return EvalStats(
        errors=errors, mean=mean, median=median, cdf_x=cdf_x, cdf_y=cdf_y, skipped=skipped
    )


def save_model(mlp: Mlp, path: str) -> None:
    """Write the architecture and parameters to a versioned binary container."""
    payload: Dict[str, np.ndarray] = {
        "format_version": np.array([MODEL_FORMAT_VERSION]),
        "sizes": np.asarray(mlp.sizes, dtype=np.int64),
        "activations": np.asarray(mlp.activations),
    }
    for k, (W, b) in enumerate(zip(mlp.weights, mlp.biases)):
        payload[f"weight_{k}"] = W
        payload[f"bias_{k}"] = b
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_model(path: str) -> Mlp:
    """Inverse of :func:`save_model`; exact round trip of all parameters."""
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"][0])
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"{path}: model format version {version} unsupported")
        sizes = tuple(int(n) for n in data["sizes"])
        activations = tuple(str(a) for a in data["activations"])
        weights = [np.array(data[f"weight_{k}"]) for k in range(len(sizes) - 1)]
        biases = [np.array(data[f"bias_{k}"]) for k in range(len(sizes) - 1)]
    return Mlp(sizes=sizes, weights=weights, biases=biases, activations=activations)
