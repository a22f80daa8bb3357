"""Tests for the feedforward network: initialization, backprop, the
optimizer, permutation augmentation, training, and model persistence.

Gradient checks use central differences; the optimizer is checked against
an independent scalar re-implementation of the published update rule and
a frozen single-step value computed by hand.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eemax.ann import (
    EvalStats,
    Mlp,
    NadamState,
    TrainConfig,
    architecture,
    augment_permute,
    evaluate,
    forward,
    init,
    load_model,
    loss_and_grad,
    optimizer_step,
    permutation_index_maps,
    predict_powers,
    save_model,
    train,
)
from eemax.model import ProblemInstance, beta_flat_index, objective
from eemax.scenario import DatasetSample, defeaturize, featurize
from tests.conftest import random_instance

# ---------------------------------------------------------------------------
# architecture / init


def test_architecture_standard():
    sizes, acts = architecture(4, "standard")
    assert sizes == (20, 128, 64, 32, 16, 8, 4)
    assert acts == ("elu", "relu", "elu", "relu", "elu", "linear")


def test_architecture_small_and_deep_wide():
    sizes, acts = architecture(2, "small")
    assert sizes == (6, 16, 8, 2)
    assert acts == ("elu", "relu", "linear")

    sizes, acts = architecture(7, "deep-wide")
    assert sizes[0] == 7 * 8 and sizes[-1] == 7
    assert sizes[1:-1] == (1024, 4096, 1024, 512, 256, 128, 64, 32, 16)
    assert acts[0] == "elu" and acts[-2] == "elu" and acts[-1] == "linear"
    assert all(a == "relu" for a in acts[1:-2])


def test_architecture_unknown_variant():
    with pytest.raises(ValueError, match="variant"):
        architecture(4, "gigantic")


def test_init_glorot_bounds_and_zero_biases():
    mlp = init((10, 20, 5), ("elu", "linear"), seed=3)
    assert mlp.weights[0].shape == (20, 10)
    assert mlp.weights[1].shape == (5, 20)
    for W, (fan_in, fan_out) in zip(mlp.weights, [(10, 20), (20, 5)]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        assert np.all(np.abs(W) <= limit)
        # A uniform draw over the full interval should come close to the bound.
        assert np.max(np.abs(W)) > 0.8 * limit
    for b in mlp.biases:
        assert np.all(b == 0.0)


def test_init_seed_determinism():
    a = init((6, 8, 2), ("elu", "linear"), seed=11)
    b = init((6, 8, 2), ("elu", "linear"), seed=11)
    c = init((6, 8, 2), ("elu", "linear"), seed=12)
    for Wa, Wb in zip(a.weights, b.weights):
        assert np.array_equal(Wa, Wb)
    assert not np.array_equal(a.weights[0], c.weights[0])


def test_mlp_validation():
    W = [np.zeros((3, 2)), np.zeros((1, 3))]
    b = [np.zeros(3), np.zeros(1)]
    with pytest.raises(ValueError, match="linear"):
        Mlp(sizes=(2, 3, 1), weights=W, biases=b, activations=("elu", "relu"))
    with pytest.raises(ValueError, match="activation"):
        Mlp(sizes=(2, 3, 1), weights=W, biases=b, activations=("tanh", "linear"))
    with pytest.raises(ValueError, match="shape"):
        Mlp(sizes=(2, 3, 1), weights=[np.zeros((3, 3)), W[1]], biases=b,
            activations=("elu", "linear"))
    with pytest.raises(ValueError, match="number of layers"):
        Mlp(sizes=(2, 3, 1), weights=W[:1], biases=b, activations=("elu", "linear"))


# ---------------------------------------------------------------------------
# forward


def _tiny_net(acts=("relu", "linear")):
    return Mlp(
        sizes=(2, 2, 1),
        weights=[np.array([[1.0, -1.0], [0.5, 2.0]]), np.array([[1.0, -3.0]])],
        biases=[np.array([0.1, -0.2]), np.array([0.25])],
        activations=acts,
    )


def test_forward_matches_hand_computation_relu():
    # [DERIVED] by hand: z1 = (-0.9, 4.3), relu -> (0, 4.3),
    # z2 = 1*0 - 3*4.3 + 0.25 = -12.65.
    out = forward(_tiny_net(), np.array([1.0, 2.0]))
    assert out.shape == (1,)
    assert out[0] == pytest.approx(-12.65, rel=1e-15)


def test_forward_matches_hand_computation_elu():
    # [DERIVED] by hand: elu(-0.9) = e^-0.9 - 1, second unit stays 4.3.
    out = forward(_tiny_net(("elu", "linear")), np.array([1.0, 2.0]))
    expected = 1.0 * math.expm1(-0.9) - 3.0 * 4.3 + 0.25
    assert out[0] == pytest.approx(expected, rel=1e-15)


def test_forward_batch_matches_rows():
    mlp = init((6, 8, 3), ("elu", "linear"), seed=0)
    rng = np.random.default_rng(5)
    X = rng.normal(size=(7, 6))
    batch = forward(mlp, X)
    assert batch.shape == (7, 3)
    for i in range(7):
        assert np.allclose(batch[i], forward(mlp, X[i]), rtol=1e-13)


def test_forward_validation():
    mlp = init((4, 3, 2), ("relu", "linear"), seed=0)
    with pytest.raises(ValueError, match="inputs"):
        forward(mlp, np.zeros(5))
    with pytest.raises(ValueError, match="finite"):
        forward(mlp, np.array([0.0, np.nan, 0.0, 0.0]))


# ---------------------------------------------------------------------------
# loss / gradients


def test_loss_is_mean_over_rows_and_coordinates():
    mlp = _tiny_net()
    X = np.array([[1.0, 2.0], [0.0, 0.0]])
    Y = np.array([[0.0], [0.0]])
    preds = forward(mlp, X)
    expected = float(np.mean((preds - Y) ** 2))
    loss, _ = loss_and_grad(mlp, X, Y)
    assert loss == pytest.approx(expected, rel=1e-15)


def test_gradients_match_central_differences():
    mlp = init((3, 4, 2), ("elu", "linear"), seed=9)
    rng = np.random.default_rng(21)
    X = rng.normal(size=(5, 3))
    Y = rng.normal(size=(5, 2))
    _, (gw, gb) = loss_and_grad(mlp, X, Y)
    h = 1e-6

    def loss_at():
        return loss_and_grad(mlp, X, Y)[0]

    for k, W in enumerate(mlp.weights):
        for idx in np.ndindex(*W.shape):
            orig = W[idx]
            W[idx] = orig + h
            up = loss_at()
            W[idx] = orig - h
            dn = loss_at()
            W[idx] = orig
            assert gw[k][idx] == pytest.approx((up - dn) / (2 * h), rel=1e-5, abs=1e-9)
    for k, b in enumerate(mlp.biases):
        for i in range(b.size):
            orig = b[i]
            b[i] = orig + h
            up = loss_at()
            b[i] = orig - h
            dn = loss_at()
            b[i] = orig
            assert gb[k][i] == pytest.approx((up - dn) / (2 * h), rel=1e-5, abs=1e-9)


def test_gradients_match_central_differences_relu():
    mlp = init((3, 4, 2), ("relu", "linear"), seed=2)
    rng = np.random.default_rng(22)
    X = rng.normal(size=(4, 3)) + 0.3  # keep pre-activations away from the kink
    Y = rng.normal(size=(4, 2))
    _, (gw, gb) = loss_and_grad(mlp, X, Y)
    h = 1e-6
    for k, W in enumerate(mlp.weights):
        flat = W.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = loss_and_grad(mlp, X, Y)[0]
            flat[j] = orig - h
            dn = loss_and_grad(mlp, X, Y)[0]
            flat[j] = orig
            assert gw[k].reshape(-1)[j] == pytest.approx(
                (up - dn) / (2 * h), rel=1e-5, abs=1e-9
            )


def test_loss_and_grad_validation():
    mlp = _tiny_net()
    with pytest.raises(ValueError, match="nonempty"):
        loss_and_grad(mlp, np.empty((0, 2)), np.empty((0, 1)))
    with pytest.raises(ValueError, match="equal lengths"):
        loss_and_grad(mlp, np.zeros((2, 2)), np.zeros((3, 1)))


# ---------------------------------------------------------------------------
# optimizer


def _scalar_param_net(theta: float) -> Mlp:
    return Mlp(
        sizes=(1, 1),
        weights=[np.array([[theta]])],
        biases=[np.array([0.0])],
        activations=("linear",),
    )


def _nadam_scalar(theta, gs, lr=0.002, b1=0.9, b2=0.999, eps=1e-7):
    # Independent re-implementation of the update rule on Python floats.
    m = v = 0.0
    for t, g in enumerate(gs, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        theta -= lr * (b1 * mhat + (1 - b1) * g / (1 - b1**t)) / (math.sqrt(vhat) + eps)
    return theta


def test_optimizer_first_step_hand_value():
    # [DERIVED] hand-unrolled: theta=1, g=0.5 -> m=0.05, v=0.00025,
    # mhat=0.5, vhat=0.25, step = 0.002*(0.45+0.5)/(0.5+1e-7).
    mlp = _scalar_param_net(1.0)
    state = NadamState.for_model(mlp)
    optimizer_step(mlp, ([np.array([[0.5]])], [np.array([0.0])]), state)
    assert mlp.weights[0][0, 0] == pytest.approx(0.9962000007599998, abs=1e-15)
    assert state.t == 1
    # Zero gradient on the bias leaves it untouched.
    assert mlp.biases[0][0] == 0.0


def test_optimizer_multistep_matches_scalar_reference():
    gs = [0.5, -0.25, 0.125, 2.0, -1.0]
    mlp = _scalar_param_net(1.0)
    state = NadamState.for_model(mlp)
    for g in gs:
        optimizer_step(mlp, ([np.array([[g]])], [np.array([0.0])]), state)
    assert state.t == len(gs)
    assert mlp.weights[0][0, 0] == pytest.approx(_nadam_scalar(1.0, gs), rel=1e-14)


def test_optimizer_updates_every_parameter_elementwise():
    mlp = init((3, 4, 2), ("elu", "linear"), seed=4)
    rng = np.random.default_rng(8)
    X, Y = rng.normal(size=(6, 3)), rng.normal(size=(6, 2))
    _, grads = loss_and_grad(mlp, X, Y)
    # Scalar reference applied elementwise must reproduce the array update.
    expected_w = [
        np.vectorize(lambda th, g: _nadam_scalar(th, [g]))(W, G)
        for W, G in zip(mlp.weights, grads[0])
    ]
    state = NadamState.for_model(mlp)
    optimizer_step(mlp, grads, state)
    for W, E in zip(mlp.weights, expected_w):
        assert np.allclose(W, E, rtol=1e-13)


def test_optimizer_descends_on_quadratic():
    # Minimize (w*1 - 0)^2 from w=1: repeated steps must shrink |w|.
    mlp = _scalar_param_net(1.0)
    state = NadamState.for_model(mlp)
    X, Y = np.array([[1.0]]), np.array([[0.0]])
    losses = []
    for _ in range(400):
        loss, grads = loss_and_grad(mlp, X, Y)
        losses.append(loss)
        optimizer_step(mlp, grads, state, lr=0.01)
    assert losses[-1] < 1e-4 * losses[0]


# ---------------------------------------------------------------------------
# permutation augmentation


def _distinct_instance(L: int) -> ProblemInstance:
    rng = np.random.default_rng(100 + L)
    return ProblemInstance(
        L=L,
        alpha=10.0 ** rng.uniform(-1, 2, size=L),
        beta=10.0 ** rng.uniform(-3, 0, size=L * (L - 1)),
        p_max=10.0 ** rng.uniform(-1, 1, size=L),
        mu=np.full(L, 4.0),
        p_circuit=np.full(L, 1.0),
    )


@pytest.mark.parametrize("L,sigma", [(2, (1, 0)), (3, (2, 0, 1)), (4, (3, 0, 2, 1))])
def test_feature_map_matches_relabeled_instance(L, sigma):
    inst = _distinct_instance(L)
    sigma = np.asarray(sigma)
    beta_mat = inst.beta_matrix
    relabeled = ProblemInstance(
        L=L,
        alpha=inst.alpha[sigma],
        beta=beta_mat[np.ix_(sigma, sigma)][~np.eye(L, dtype=bool)],
        p_max=inst.p_max[sigma],
        mu=inst.mu[sigma],
        p_circuit=inst.p_circuit[sigma],
    )
    feat_idx, label_idx = permutation_index_maps(L, sigma)
    assert np.allclose(featurize(relabeled), featurize(inst)[feat_idx], rtol=1e-13)
    assert np.array_equal(label_idx, sigma)


def test_permutation_maps_are_permutations():
    feat_idx, label_idx = permutation_index_maps(3, (2, 0, 1))
    assert sorted(feat_idx.tolist()) == list(range(12))
    assert sorted(label_idx.tolist()) == [0, 1, 2]


def test_permutation_identity_is_noop():
    feat_idx, label_idx = permutation_index_maps(4, range(4))
    assert np.array_equal(feat_idx, np.arange(20))
    assert np.array_equal(label_idx, np.arange(4))


def test_permutation_rejects_non_permutation():
    with pytest.raises(ValueError, match="permutation"):
        permutation_index_maps(3, (0, 0, 2))
    with pytest.raises(ValueError, match="permutation"):
        permutation_index_maps(3, (0, 1))


def test_beta_block_follows_flat_layout():
    L = 3
    sigma = (1, 2, 0)
    feat_idx, _ = permutation_index_maps(L, sigma)
    base = L
    for i in range(L):
        for j in range(L):
            if i == j:
                continue
            src = feat_idx[base + beta_flat_index(L, i, j)] - base
            assert src == beta_flat_index(L, sigma[i], sigma[j])


def test_augment_permute_round_trip():
    rng = np.random.default_rng(3)
    L = 4
    sample = DatasetSample(
        channel_id=7,
        pmax_dbw=5.0,
        features=rng.normal(size=L * (L + 1)),
        labels=-rng.uniform(0, 5, size=L),
        objective=2.5,
    )
    sigma = np.array([2, 0, 3, 1])
    inv = np.argsort(sigma)
    back = augment_permute(augment_permute(sample, sigma), inv)
    assert np.array_equal(back.features, sample.features)
    assert np.array_equal(back.labels, sample.labels)
    assert back.channel_id == sample.channel_id
    assert back.pmax_dbw == sample.pmax_dbw
    assert back.objective == sample.objective


def test_augment_preserves_prediction_quality():
    # Relabeling users must not change the objective of the labeled powers:
    # defeaturize the permuted features and score the permuted labels.
    inst = _distinct_instance(3)
    p = np.array([0.4, 0.9, 0.2]) * inst.p_max
    labels = np.log10(p / inst.p_max)
    sample = DatasetSample(
        channel_id=0, pmax_dbw=0.0, features=featurize(inst), labels=labels,
        objective=1.0,
    )
    f_base = objective(p, inst, "wsee")
    for sigma in [(1, 0, 2), (2, 1, 0), (1, 2, 0)]:
        aug = augment_permute(sample, sigma)
        inst2 = defeaturize(aug.features, 3, mu=4.0, p_circuit=1.0)
        p2 = 10.0**aug.labels * inst2.p_max
        assert objective(p2, inst2, "wsee") == pytest.approx(f_base, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.permutations(list(range(4))))
def test_feature_map_is_permutation_property(sigma):
    feat_idx, label_idx = permutation_index_maps(4, sigma)
    assert sorted(feat_idx.tolist()) == list(range(20))
    assert sorted(label_idx.tolist()) == list(range(4))


# ---------------------------------------------------------------------------
# training loop


def _toy_samples(rng, n=24, L=2):
    return [
        DatasetSample(
            channel_id=i,
            pmax_dbw=0.0,
            features=rng.normal(size=L * (L + 1)),
            labels=-rng.uniform(0.0, 3.0, size=L),
            objective=1.0,
        )
        for i in range(n)
    ]


def test_train_is_deterministic():
    rng = np.random.default_rng(17)
    samples = _toy_samples(rng)
    sizes, acts = architecture(2, "small")
    cfg = TrainConfig(epochs=5, batch_size=8, seed=42)
    net0 = init(sizes, acts, seed=1)
    a, hist_a = train(net0, samples, samples[:4], cfg)
    b, hist_b = train(net0, samples, samples[:4], cfg)
    assert np.array_equal(hist_a, hist_b)
    for Wa, Wb in zip(a.weights, b.weights):
        assert np.array_equal(Wa, Wb)


def test_train_does_not_mutate_input_model():
    rng = np.random.default_rng(18)
    samples = _toy_samples(rng)
    sizes, acts = architecture(2, "small")
    net0 = init(sizes, acts, seed=1)
    before = [W.copy() for W in net0.weights]
    train(net0, samples, [], TrainConfig(epochs=2, batch_size=8, seed=0))
    for W, B in zip(net0.weights, before):
        assert np.array_equal(W, B)


def test_train_reduces_training_error():
    rng = np.random.default_rng(19)
    samples = _toy_samples(rng, n=32)
    sizes, acts = architecture(2, "small")
    net0 = init(sizes, acts, seed=1)
    _, hist = train(net0, samples, [], TrainConfig(epochs=60, batch_size=8, seed=0))
    assert hist.shape == (60, 2)
    assert hist[-1, 0] < 0.5 * hist[0, 0]
    assert np.all(np.isnan(hist[:, 1]))  # no validation set


def test_train_records_validation_error():
    rng = np.random.default_rng(20)
    samples = _toy_samples(rng)
    sizes, acts = architecture(2, "small")
    net0 = init(sizes, acts, seed=1)
    _, hist = train(net0, samples[:16], samples[16:], TrainConfig(epochs=3, batch_size=8, seed=0))
    assert np.all(np.isfinite(hist[:, 1]))


def test_train_validation_errors():
    sizes, acts = architecture(2, "small")
    net = init(sizes, acts, seed=0)
    with pytest.raises(ValueError, match="nonempty"):
        train(net, [], [], TrainConfig(epochs=1))
    rng = np.random.default_rng(0)
    bad = _toy_samples(rng, n=4, L=3)
    with pytest.raises(ValueError, match="do not match"):
        train(net, bad, [], TrainConfig(epochs=1))


def test_train_raises_on_divergence():
    rng = np.random.default_rng(7)
    samples = _toy_samples(rng, n=8)
    sizes, acts = architecture(2, "small")
    net = init(sizes, acts, seed=1)
    for W in net.weights:
        W *= 1e160  # force overflow in the first forward pass
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(FloatingPointError, match="diverged"):
            train(net, samples, [], TrainConfig(epochs=2, batch_size=4, seed=0))


def test_train_config_validation():
    with pytest.raises(ValueError, match="epochs"):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError, match="batch"):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError, match="lr_decay"):
        TrainConfig(lr_decay=0.0)
    with pytest.raises(ValueError, match="lr_decay"):
        TrainConfig(lr_decay=1.5)


def test_train_first_epoch_ignores_lr_decay():
    # The schedule is lr * decay^epoch, so epoch 0 always runs at full lr.
    rng = np.random.default_rng(21)
    samples = _toy_samples(rng)
    sizes, acts = architecture(2, "small")
    net0 = init(sizes, acts, seed=1)
    a, _ = train(net0, samples, [], TrainConfig(epochs=1, batch_size=8, seed=3))
    b, _ = train(net0, samples, [], TrainConfig(epochs=1, batch_size=8, seed=3, lr_decay=0.5))
    for Wa, Wb in zip(a.weights, b.weights):
        assert np.array_equal(Wa, Wb)


def test_train_with_lr_decay_converges():
    rng = np.random.default_rng(22)
    samples = _toy_samples(rng, n=32)
    sizes, acts = architecture(2, "small")
    net0 = init(sizes, acts, seed=1)
    _, hist = train(
        net0, samples, [], TrainConfig(epochs=60, batch_size=8, seed=0, lr_decay=0.97)
    )
    assert hist[-1, 0] < 0.5 * hist[0, 0]


# ---------------------------------------------------------------------------
# prediction / evaluation


def _constant_output_net(L: int, value: float) -> Mlp:
    n_in = L * (L + 1)
    return Mlp(
        sizes=(n_in, L),
        weights=[np.zeros((L, n_in))],
        biases=[np.full(L, value)],
        activations=("linear",),
    )


def test_predict_clips_to_budget(rng):
    inst = random_instance(rng, 3)
    alloc = predict_powers(_constant_output_net(3, 50.0), inst)
    assert np.allclose(alloc.p, inst.p_max)


def test_predict_clips_from_below(rng):
    inst = random_instance(rng, 3)
    alloc = predict_powers(_constant_output_net(3, -500.0), inst, clip_m=20.0)
    assert np.allclose(alloc.p, 1e-20 * inst.p_max)


def test_predict_is_always_feasible(rng):
    mlp = init(*architecture(3, "small"), seed=5)
    for _ in range(20):
        inst = random_instance(rng, 3)
        alloc = predict_powers(mlp, inst)
        assert np.all(alloc.p >= 0)
        assert np.all(alloc.p <= inst.p_max * (1 + 1e-12))


def test_evaluate_matches_manual_loop(rng):
    mlp = init(*architecture(2, "small"), seed=6)
    samples = []
    for i in range(6):
        inst = random_instance(rng, 2)
        p = rng.uniform(0.1, 1.0, size=2) * inst.p_max
        samples.append(
            DatasetSample(
                channel_id=i,
                pmax_dbw=10 * math.log10(inst.p_max[0]),
                features=featurize(inst),
                labels=np.log10(p / inst.p_max),
                objective=float(objective(p, inst, "wsee")),
            )
        )
    stats = evaluate(mlp, samples, kind="wsee", mu=4.0, p_circuit=1.0)
    assert isinstance(stats, EvalStats)
    assert stats.errors.size == 6 and stats.skipped == 0
    for s, err in zip(samples, stats.errors):
        inst = defeaturize(s.features, 2, mu=4.0, p_circuit=1.0)
        f_hat = objective(predict_powers(mlp, inst), inst, "wsee")
        assert err == pytest.approx(abs(s.objective - f_hat) / s.objective, rel=1e-12)
    assert stats.mean == pytest.approx(stats.errors.mean())
    assert stats.median == pytest.approx(np.median(stats.errors))
    # CDF is the sorted errors against uniform quantiles.
    assert np.array_equal(stats.cdf_x, np.sort(stats.errors))
    assert stats.cdf_y[0] == pytest.approx(1 / 6) and stats.cdf_y[-1] == pytest.approx(1.0)


def test_evaluate_skips_zero_objective(rng):
    mlp = init(*architecture(2, "small"), seed=6)
    inst = random_instance(rng, 2)
    good = DatasetSample(
        channel_id=0, pmax_dbw=0.0, features=featurize(inst),
        labels=np.log10(np.full(2, 0.5)), objective=1.0,
    )
    degenerate = DatasetSample(
        channel_id=1, pmax_dbw=0.0, features=featurize(inst),
        labels=np.full(2, -20.0), objective=0.0,
    )
    stats = evaluate(mlp, [good, degenerate, good])
    assert stats.skipped == 1
    assert stats.errors.size == 2


def test_evaluate_empty_set():
    mlp = init(*architecture(2, "small"), seed=0)
    stats = evaluate(mlp, [])
    assert math.isnan(stats.mean) and math.isnan(stats.median)
    assert stats.errors.size == 0


def test_perfect_predictions_give_zero_error(rng):
    # A network that reproduces the labels exactly has zero relative error.
    inst = random_instance(rng, 2)
    p = np.array([0.3, 0.8]) * inst.p_max
    labels = np.log10(p / inst.p_max)
    sample = DatasetSample(
        channel_id=0, pmax_dbw=0.0, features=featurize(inst), labels=labels,
        objective=float(objective(p, inst, "wsee")),
    )
    n_in = 6
    net = Mlp(
        sizes=(n_in, 2),
        weights=[np.zeros((2, n_in))],
        biases=[labels.copy()],
        activations=("linear",),
    )
    stats = evaluate(net, [sample])
    assert stats.errors[0] == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# persistence


def test_save_load_round_trip(tmp_path):
    mlp = init(*architecture(3, "standard"), seed=13)
    path = str(tmp_path / "model.npz")
    save_model(mlp, path)
    back = load_model(path)
    assert back.sizes == mlp.sizes
    assert back.activations == mlp.activations
    for Wa, Wb in zip(mlp.weights, back.weights):
        assert np.array_equal(Wa, Wb)
    for ba, bb in zip(mlp.biases, back.biases):
        assert np.array_equal(ba, bb)


def test_load_rejects_unknown_format_version(tmp_path):
    path = str(tmp_path / "future.npz")
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format_version=np.array([99]),
            sizes=np.array([2, 1], dtype=np.int64),
            activations=np.asarray(["linear"]),
            weight_0=np.zeros((1, 2)),
            bias_0=np.zeros(1),
        )
    with pytest.raises(ValueError, match="version"):
        load_model(path)


def test_loaded_model_predicts_identically(tmp_path, rng):
    mlp = init(*architecture(2, "small"), seed=14)
    path = str(tmp_path / "model.npz")
    save_model(mlp, path)
    back = load_model(path)
    X = rng.normal(size=(5, 6))
    assert np.array_equal(forward(mlp, X), forward(back, X))
