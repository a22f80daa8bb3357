#!/usr/bin/env python3
"""Desk-scale learning experiment: label, train, and score a power predictor.

Generates a labeled WSEE dataset over a grid of power budgets, trains the
standard network on it, and scores the result on freshly drawn held-out
channels (also used as the validation set during training).  Writes the
loss history, the per-budget comparison curve, and the trained model into
``--outdir``, and prints the headline numbers.

Example:
    python3 scripts/desk_experiment.py --channels 100 --test-channels 20 \
        --epochs 200 --outdir desk_out
"""

import argparse
import os
import sys
import time

import numpy as np

from eemax.ann import TrainConfig, architecture, evaluate, init, predict_powers, save_model, train
from eemax.branch_bound import Tolerance, solve_global
from eemax.model import MetricKind, objective
from eemax.scenario import (
    DatasetSample,
    ScenarioConfig,
    assemble_instance,
    defeaturize,
    featurize,
    generate_scenario,
    label,
    write_dataset,
)


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=4)
    ap.add_argument("--channels", type=int, default=100, help="training channels")
    ap.add_argument("--test-channels", type=int, default=20, help="held-out channels")
    ap.add_argument(
        "--decay-exponent", type=float, default=4.5, help="power-law path-loss exponent"
    )
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--batch-size", type=int, default=512)
    ap.add_argument("--lr", type=float, default=0.001)
    ap.add_argument("--lr-decay", type=float, default=0.995, help="per-epoch step-size factor")
    ap.add_argument(
        "--label-floor",
        type=float,
        default=3.0,
        help="clip log-power labels at -FLOOR (links below that fraction of "
        "the budget are silent for the objective, and tighter floors keep "
        "their meaningless magnitudes out of the squared loss)",
    )
    ap.add_argument("--eps", type=float, default=0.01, help="labeling tolerance")
    ap.add_argument("--seed", type=int, default=0, help="master seed (training channels)")
    ap.add_argument(
        "--test-seed", type=int, default=10_000, help="master seed (held-out channels)"
    )
    ap.add_argument("--pmax-start", type=float, default=-30.0)
    ap.add_argument("--pmax-stop", type=float, default=20.0)
    ap.add_argument("--pmax-step", type=float, default=1.0)
    ap.add_argument("--outdir", default="desk_out")
    return ap.parse_args(argv)


def label_channels(config, master_seed, n_channels, grid, tol, clip_m=20.0):
    """Solve every (channel, budget) pair; returns samples and solve times."""
    samples, times_ms = [], []
    for cid in range(n_channels):
        seed = np.random.SeedSequence(entropy=master_seed, spawn_key=(cid,))
        real = generate_scenario(config, seed)
        for pdbw in grid:
            inst = assemble_instance(real, pdbw)
            t0 = time.perf_counter()
            res = solve_global(inst, MetricKind.WSEE, tol)
            times_ms.append((time.perf_counter() - t0) * 1e3)
            samples.append(
                DatasetSample(
                    channel_id=cid,
                    pmax_dbw=pdbw,
                    features=featurize(inst),
                    labels=label(res.p, inst, clip_m),
                    objective=res.value,
                )
            )
    return samples, np.asarray(times_ms)


def curve_by_budget(mlp, samples, L):
    """Mean optimal and mean predicted WSEE per power budget."""
    by_pmax = {}
    for s in samples:
        inst = defeaturize(s.features, L)
        pred = predict_powers(mlp, inst)
        f_hat = objective(pred, inst, MetricKind.WSEE)
        by_pmax.setdefault(s.pmax_dbw, []).append((s.objective, f_hat))
    rows = []
    for pdbw in sorted(by_pmax):
        pairs = np.asarray(by_pmax[pdbw])
        rows.append((pdbw, pairs[:, 0].mean(), pairs[:, 1].mean()))
    return rows


def main(argv=None) -> int:
    args = parse_args(argv)
    os.makedirs(args.outdir, exist_ok=True)
    config = ScenarioConfig(L=args.L, decay_exponent=args.decay_exponent)
    tol = Tolerance("relative", args.eps)
    n_budgets = int(round((args.pmax_stop - args.pmax_start) / args.pmax_step)) + 1
    grid = [args.pmax_start + k * args.pmax_step for k in range(n_budgets)]

    t0 = time.perf_counter()
    train_set, t_train = label_channels(
        config, args.seed, args.channels, grid, tol, clip_m=args.label_floor
    )
    test_set, t_test = label_channels(
        config, args.test_seed, args.test_channels, grid, tol, clip_m=args.label_floor
    )
    all_ms = np.concatenate([t_train, t_test])
    print(
        f"labeled {len(train_set)} train + {len(test_set)} test samples in "
        f"{time.perf_counter() - t0:.1f} s "
        f"(median solve {np.median(all_ms[1:]):.2f} ms, max {all_ms[1:].max():.1f} ms)"
    )
    write_dataset(train_set, os.path.join(args.outdir, "train.csv"))
    write_dataset(test_set, os.path.join(args.outdir, "test.csv"))

    sizes, acts = architecture(args.L, "standard")
    mlp = init(sizes, acts, seed=args.seed)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        lr_decay=args.lr_decay,
        seed=args.seed + 1,
    )
    t0 = time.perf_counter()
    trained, history = train(mlp, train_set, test_set, cfg)
    print(f"trained {args.epochs} epochs in {time.perf_counter() - t0:.1f} s")
    save_model(trained, os.path.join(args.outdir, "model.npz"))
    with open(os.path.join(args.outdir, "history.csv"), "w") as fh:
        fh.write("epoch,train_mse,val_mse\n")
        for epoch in range(history.shape[0]):
            fh.write(f"{epoch},{history[epoch, 0]:.10g},{history[epoch, 1]:.10g}\n")

    stats = evaluate(trained, test_set, MetricKind.WSEE)
    print(
        f"test relative WSEE error: mean {stats.mean:.4g}, median {stats.median:.4g} "
        f"({stats.errors.size} samples, {stats.skipped} skipped)"
    )

    rows = curve_by_budget(trained, test_set, args.L)
    worst = max(abs(pred - opt) / opt for _, opt, pred in rows)
    with open(os.path.join(args.outdir, "curve.csv"), "w") as fh:
        fh.write("pmax_dbw,mean_optimal,mean_predicted\n")
        for pdbw, opt, pred in rows:
            fh.write(f"{pdbw},{opt:.10g},{pred:.10g}\n")
    print(f"per-budget mean curve: worst relative deviation {worst:.4g}")

    # Validation-loss trend: count 50-epoch windows that never dip below
    # their start and end higher (sustained increase).
    val = history[:, 1]
    window = 50
    bad = sum(
        1
        for t in range(len(val) - window + 1)
        if val[t + window - 1] > val[t] and val[t : t + window].min() >= val[t]
    )
    print(f"sustained-increase validation windows ({window} epochs): {bad}")
    print(f"final train MSE {history[-1, 0]:.6g}, val MSE {history[-1, 1]:.6g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
