"""Acceptance suite: one test per release criterion.

Run with ``pytest tests/test_acceptance.py -v`` to get one pass/fail line
per criterion.  Criteria 7-10 share a desk-scale experiment (labeled
dataset, trained network, held-out test channels) that runs once as a
session fixture; expect a few minutes of wall time for the whole file.
"""

import math
import time

import numpy as np
import pytest

from eemax.ann import (
    TrainConfig,
    architecture,
    evaluate,
    init,
    predict_powers,
    train,
)
from eemax.branch_bound import Box, Tolerance, bisect, bound, lambert_w0, ratio_max, solve_global
from eemax.model import (
    MetricKind,
    ProblemInstance,
    baseline,
    grad_wsee,
    objective,
)
from eemax.sca import ScaOptions, solve_sca, surrogate, sweep
from eemax.scenario import (
    DatasetSample,
    ScenarioConfig,
    assemble_instance,
    defeaturize,
    featurize,
    generate_scenario,
    label,
)
from tests.conftest import random_box, random_instance
from tests.oracles import ee_stationarity_residual, golden_section_max, grid_search_max

pytestmark = pytest.mark.usefixtures("compiled_kernels")

_METRICS = ("wsee", "gee", "wpee", "wmee", "wsr")


# ---------------------------------------------------------------------------
# desk-scale experiment shared by criteria 7, 8, 9, 10
# ---------------------------------------------------------------------------

DESK_L = 4
DESK_GRID = [-30.0 + k for k in range(51)]  # -30..20 dBW, 1 dB apart
DESK_TRAIN_CHANNELS = 100
DESK_TEST_CHANNELS = 20
DESK_EPS = 0.01
DESK_SEED_TRAIN = 0
DESK_SEED_TEST = 10_000
DESK_SEED_SHIFT = 20_000
# Training protocol at desk scale: labels are floored at -3 because below
# 0.1% of the budget a link is silent for every practical purpose, yet the
# exact magnitude of such labels (-8 vs -16, say) would dominate the squared
# loss; batches of 512 and a gently decayed step size keep the validation
# trajectory free of sustained excursions on a 5100-sample run.
DESK_LABEL_FLOOR = 3.0
DESK_TRAIN_CFG = TrainConfig(
    epochs=200, batch_size=512, lr=0.001, lr_decay=0.995, seed=DESK_SEED_TRAIN + 1
)


def _labeled_set(config, master_seed, n_channels, grid, tol, clip_m=20.0):
    """Channels x budgets, labeled by the global solver.

    Returns the samples, per-solve wall times (ms), and one budget-0
    template instance per channel for baseline comparisons.
    """
    samples, times_ms, templates = [], [], []
    for cid in range(n_channels):
        seed = np.random.SeedSequence(entropy=master_seed, spawn_key=(cid,))
        real = generate_scenario(config, seed)
        templates.append(assemble_instance(real, 0.0))
        for pdbw in grid:
            inst = assemble_instance(real, pdbw)
            t0 = time.perf_counter()
            res = solve_global(inst, MetricKind.WSEE, tol)
            times_ms.append((time.perf_counter() - t0) * 1e3)
            assert res.certified
            samples.append(
                DatasetSample(
                    channel_id=cid,
                    pmax_dbw=pdbw,
                    features=featurize(inst),
                    labels=label(res.p, inst, clip_m),
                    objective=res.value,
                )
            )
    return samples, np.asarray(times_ms), templates


@pytest.fixture(scope="session")
def desk(compiled_kernels):
    config = ScenarioConfig(L=DESK_L)
    tol = Tolerance("relative", DESK_EPS)
    train_set, train_times, _ = _labeled_set(
        config, DESK_SEED_TRAIN, DESK_TRAIN_CHANNELS, DESK_GRID, tol,
        clip_m=DESK_LABEL_FLOOR,
    )
    test_set, _, test_templates = _labeled_set(
        config, DESK_SEED_TEST, DESK_TEST_CHANNELS, DESK_GRID, tol,
        clip_m=DESK_LABEL_FLOOR,
    )
    sizes, acts = architecture(DESK_L, "standard")
    mlp = init(sizes, acts, seed=DESK_SEED_TRAIN)
    trained, history = train(mlp, train_set, test_set, DESK_TRAIN_CFG)
    stats = evaluate(trained, test_set, MetricKind.WSEE)
    return {
        "config": config,
        "tol": tol,
        "train_set": train_set,
        "test_set": test_set,
        "test_templates": test_templates,
        "solve_times_ms": train_times,
        "model": trained,
        "history": history,
        "stats": stats,
    }


# ---------------------------------------------------------------------------
# criterion 1
# ---------------------------------------------------------------------------


def test_criterion_01_global_optimum_matches_grid_oracle():
    """Certified solver value is never below the exhaustive-grid value.

    Grid points are feasible, so the 200-per-axis maximum is a lower bound
    on the true optimum; the certificate guarantees value >= optimum/1.01.
    """
    rng = np.random.default_rng(20260815)
    tol = Tolerance("relative", 0.01)
    for L, n_cases in ((2, 50), (3, 20)):
        for _ in range(n_cases):
            inst = random_instance(rng, L, pmax_dbw_range=(-20.0, 10.0))
            res = solve_global(inst, MetricKind.WSEE, tol)
            assert res.certified
            oracle = grid_search_max(
                inst.alpha, inst.beta_matrix, inst.mu, inst.p_circuit,
                inst.weights, inst.p_max, "wsee", n=200,
            )
            assert res.value >= oracle / 1.01 - 1e-9


# ---------------------------------------------------------------------------
# criterion 2
# ---------------------------------------------------------------------------


def test_criterion_02_bounds_valid_and_monotone(rng):
    """Box bounds dominate every sampled point and shrink under bisection."""
    boxes_per_metric = 40  # 5 metrics x 40 boxes = 200 boxes
    points_per_box = 1000
    for kind in _METRICS:
        for _ in range(boxes_per_metric):
            L = int(rng.integers(2, 5))
            inst = random_instance(rng, L, pmax_dbw_range=(-15.0, 10.0), weights="random")
            box = random_box(rng, inst)
            beta_val, ptilde = bound(box, inst, kind)
            # Validity: no sampled point beats the bound.
            pts = rng.uniform(box.r, box.s, size=(points_per_box, L))
            for p in pts:
                assert objective(p, inst, kind) <= beta_val + 1e-9
            # Monotonicity: both children bound at or below the parent.
            try:
                left, right = bisect(box, ptilde)
            except ValueError:
                continue  # degenerate box, nothing to split
            for child in (left, right):
                child_val, _ = bound(child, inst, kind)
                assert child_val <= beta_val + 1e-9


# ---------------------------------------------------------------------------
# criterion 3
# ---------------------------------------------------------------------------


def test_criterion_03_lambert_w_residual_sweep():
    """|w e^w - x| <= 1e-12 max(1, |x|) over a 10000-point sweep of the domain."""
    branch = -1.0 / math.e
    xs = np.concatenate([
        10.0 ** np.linspace(-300.0, 300.0, 5000),       # positive reach
        -(10.0 ** np.linspace(-300.0, math.log10(1 / math.e) - 1e-9, 2500)),
        branch + 10.0 ** np.linspace(-15.0, math.log10(1 / math.e) - 1e-9, 2500),
    ])
    assert xs.size == 10_000
    for x in xs:
        w = lambert_w0(float(x))
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))


# ---------------------------------------------------------------------------
# criterion 4
# ---------------------------------------------------------------------------


def test_criterion_04_per_link_closed_form_stationarity():
    """The closed-form maximizer zeroes the ratio derivative and matches
    a golden-section oracle in argument."""
    rng = np.random.default_rng(41)
    for _ in range(1000):
        at = 10.0 ** rng.uniform(-3.0, 3.0)
        mu = rng.uniform(0.5, 10.0)
        pc = rng.uniform(0.1, 10.0)
        p_hat, _ = ratio_max(at, mu, pc, 0.0, 1e12)  # interior maximizer
        assert p_hat < 1e11
        assert ee_stationarity_residual(at, mu, pc, p_hat) < 1e-8
        hi = 10.0 * (p_hat + pc / mu + 1.0 / at)  # generous independent bracket
        p_gs, _ = golden_section_max(
            lambda p: math.log2(1.0 + at * p) / (mu * p + pc), 0.0, hi, tol=1e-9 * hi
        )
        assert abs(p_hat - p_gs) <= 1e-6 * max(1.0, abs(p_hat))


# ---------------------------------------------------------------------------
# criterion 5
# ---------------------------------------------------------------------------


def test_criterion_05_sca_first_order_optimality(rng):
    """Ascent is monotone, terminal points are first-order optimal, and the
    surrogate's derivative equals the true gradient at the expansion point."""
    # Run past the default objective-stall rule (tol=1e-16 bottoms out at
    # the floating-point progress floor) so the terminal point is the
    # method's true fixed point rather than an early stall.
    opts = ScaOptions(tol=1e-16)
    for k in range(100):
        weights = "random" if k % 2 else "ones"
        inst = random_instance(rng, 4, pmax_dbw_range=(-30.0, 20.0), weights=weights)
        res, trace = solve_sca(inst, opts=opts)
        assert np.all(np.diff(trace.objectives) >= -1e-12)
        p = res.p.p
        g = grad_wsee(p, inst)
        residual = np.linalg.norm(np.clip(p + g, 0.0, inst.p_max) - p)
        assert residual < 1e-4 * (1.0 + np.linalg.norm(p))

    # Single-link instances: the first-order method attains the global optimum.
    for _ in range(20):
        inst = random_instance(rng, 1, pmax_dbw_range=(-20.0, 20.0))
        res_sca, _ = solve_sca(inst)
        res_bb = solve_global(inst, MetricKind.WSEE, Tolerance("relative", 1e-8))
        assert res_sca.value >= res_bb.value * (1.0 - 1e-4)

    # Appendix identity: d/dp_i surrogate == d/dp_i objective at p_t.
    for _ in range(10):
        inst = random_instance(rng, 3, weights="random")
        p_t = rng.uniform(0.2, 1.0, size=3) * inst.p_max
        g = grad_wsee(p_t, inst)
        h = 1e-6
        for i in range(3):
            hi_step = min(h * max(p_t[i], 1e-3), 0.49 * (inst.p_max[i] - p_t[i]))
            num = (
                surrogate(p_t[i] + hi_step, i, p_t, inst)
                - surrogate(p_t[i] - hi_step, i, p_t, inst)
            ) / (2 * hi_step)
            assert num == pytest.approx(g[i], rel=1e-5, abs=1e-12)


# ---------------------------------------------------------------------------
# criterion 6
# ---------------------------------------------------------------------------


def test_criterion_06_metric_extension_identities(rng):
    """WMEE = min, WPEE = weighted product, GEE exact on singletons, WSR
    candidate = upper corner."""
    for _ in range(50):
        L = int(rng.integers(2, 5))
        inst = random_instance(rng, L, weights="random")
        box = random_box(rng, inst)

        # Per-link maxima with interference frozen at the lower corner.
        per_link = []
        for i in range(L):
            interference = 1.0 + sum(
                inst.beta_matrix[i, j] * box.r[j] for j in range(L) if j != i
            )
            at = inst.alpha[i] / interference
            _, v = ratio_max(at, inst.mu[i], inst.p_circuit[i], box.r[i], box.s[i])
            per_link.append(v)
        per_link = np.asarray(per_link)

        wmee_val, _ = bound(box, inst, "wmee")
        assert wmee_val == pytest.approx(np.min(inst.weights * per_link), rel=1e-12)

        wpee_val, _ = bound(box, inst, "wpee")
        assert wpee_val == pytest.approx(
            float(np.prod(per_link ** inst.weights)), rel=1e-12
        )

        point = rng.uniform(box.r, box.s)
        singleton = Box(r=point.copy(), s=point.copy())
        gee_val, _ = bound(singleton, inst, "gee")
        assert gee_val == pytest.approx(objective(point, inst, "gee"), rel=1e-12, abs=1e-300)

        _, wsr_candidate = bound(box, inst, "wsr")
        assert np.array_equal(wsr_candidate, box.s)


# ---------------------------------------------------------------------------
# criterion 7
# ---------------------------------------------------------------------------


def test_criterion_07_desk_scale_learning(desk):
    """5100-sample training run: validation loss trends down, held-out
    median relative error < 0.1, mean predicted curve within 10% of the
    certified curve at every budget."""
    history = desk["history"]
    assert history.shape == (200, 2)
    val = history[:, 1]
    window = 50
    sustained = [
        t
        for t in range(len(val) - window + 1)
        if val[t + window - 1] > val[t] and val[t : t + window].min() >= val[t]
    ]
    assert sustained == []

    stats = desk["stats"]
    assert stats.errors.size + stats.skipped == len(desk["test_set"])
    assert stats.median < 0.1

    by_pmax = {}
    for s in desk["test_set"]:
        inst = defeaturize(s.features, DESK_L)
        pred = predict_powers(desk["model"], inst)
        by_pmax.setdefault(s.pmax_dbw, []).append(
            (s.objective, objective(pred, inst, MetricKind.WSEE))
        )
    assert sorted(by_pmax) == DESK_GRID
    for pdbw, pairs in by_pmax.items():
        arr = np.asarray(pairs)
        mean_opt, mean_pred = arr[:, 0].mean(), arr[:, 1].mean()
        assert abs(mean_pred - mean_opt) <= 0.1 * mean_opt, f"budget {pdbw} dBW"


# ---------------------------------------------------------------------------
# criterion 8
# ---------------------------------------------------------------------------


def test_criterion_08_baseline_ordering(desk):
    """BB >= SCA >= one-shot SCA pointwise; max power near-optimal at the
    lowest budget; best-only matches BB when one user dominates."""
    bb_by_channel = {}
    for s in desk["test_set"]:
        bb_by_channel.setdefault(s.channel_id, []).append(s.objective)

    maxpow_ratio_num = 0.0
    maxpow_ratio_den = 0.0
    for cid, template in enumerate(desk["test_templates"]):
        bb_vals = bb_by_channel[cid]
        sca_vals = [r.value for r in sweep(template, DESK_GRID, mode="double-init")]
        os_vals = [r.value for r in sweep(template, DESK_GRID, mode="one-shot")]
        for bb_v, sca_v, os_v in zip(bb_vals, sca_vals, os_vals):
            assert bb_v >= sca_v * (1.0 - DESK_EPS - 1e-9)  # certificate slack
            assert sca_v >= os_v - 1e-12  # double init keeps the better point
        inst_low = template.with_p_max(10.0 ** (DESK_GRID[0] / 10.0))
        maxpow_ratio_num += objective(baseline(inst_low, "max-power"), inst_low, "wsee")
        maxpow_ratio_den += bb_vals[0]
    assert maxpow_ratio_num >= 0.95 * maxpow_ratio_den

    # Single-dominant-user instances at high budget: silencing the weak
    # links is optimal, so the best-only heuristic attains the optimum.
    rng = np.random.default_rng(88)
    for _ in range(5):
        L = 3
        alpha = np.array([10.0 ** rng.uniform(3.0, 4.0), *(10.0 ** rng.uniform(-2.5, -1.5, 2))])
        beta_mat = rng.uniform(0.5, 2.0, size=(L, L))
        np.fill_diagonal(beta_mat, 0.0)
        inst = ProblemInstance.from_matrix(
            alpha=alpha, beta_matrix=beta_mat, p_max=np.full(L, 1000.0),
            mu=np.full(L, 4.0), p_circuit=np.ones(L),
        )
        res = solve_global(inst, MetricKind.WSEE, Tolerance("relative", 1e-4))
        bo = objective(baseline(inst, "best-only"), inst, "wsee")
        assert abs(res.value - bo) <= 0.01 * max(res.value, bo)


# ---------------------------------------------------------------------------
# criterion 9
# ---------------------------------------------------------------------------


def test_criterion_09_solver_timing_envelope(desk):
    """Median warm solve time for L=4 at relative eps=0.01 stays under 500 ms."""
    times = desk["solve_times_ms"]
    assert times.size == DESK_TRAIN_CHANNELS * len(DESK_GRID)
    assert float(np.median(times)) < 500.0


# ---------------------------------------------------------------------------
# criterion 10
# ---------------------------------------------------------------------------


def test_criterion_10_distribution_shift(desk):
    """The unchanged evaluation harness scores a shifted test set (urban
    Hata path loss, 8 dB shadowing); the median error degrades by less than
    one order of magnitude."""
    shifted_config = ScenarioConfig(
        L=DESK_L, pathloss_model="hata-cost231-urban", shadowing_db=8.0
    )
    shifted_set, _, _ = _labeled_set(
        shifted_config, DESK_SEED_SHIFT, DESK_TEST_CHANNELS, DESK_GRID, desk["tol"]
    )
    stats_shift = evaluate(desk["model"], shifted_set, MetricKind.WSEE)
    median_in = desk["stats"].median
    assert stats_shift.errors.size + stats_shift.skipped == len(shifted_set)
    assert math.isfinite(stats_shift.median)
    assert stats_shift.median < 10.0 * median_in, (
        f"median relative error degraded from {median_in:.4g} in distribution "
        f"to {stats_shift.median:.4g} on urban-Hata channels "
        f"({stats_shift.median / median_in:.0f}x; the bound is 10x)"
    )
