#!/usr/bin/env python3
"""Score a trained model on channels drawn from a different propagation model.

Loads a model trained on the default power-law channels and evaluates it
on freshly drawn test sets: one in distribution, one from the urban
Hata-COST231 path-loss model with log-normal shadowing.  Prints both error
summaries and their ratio.

Example:
    python3 scripts/generalization_shift.py --model desk_out/model.npz
"""

import argparse
import sys

import numpy as np

from eemax.ann import evaluate, load_model
from eemax.branch_bound import Tolerance, solve_global
from eemax.model import MetricKind
from eemax.scenario import (
    DatasetSample,
    ScenarioConfig,
    assemble_instance,
    featurize,
    generate_scenario,
    label,
)


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", required=True, help="trained model (.npz)")
    ap.add_argument("--L", type=int, default=4)
    ap.add_argument("--channels", type=int, default=20, help="test channels per condition")
    ap.add_argument("--seed", type=int, default=10_000, help="master seed for test channels")
    ap.add_argument(
        "--shift-seed", type=int, default=20_000, help="master seed for shifted channels"
    )
    ap.add_argument("--shadowing-db", type=float, default=8.0)
    ap.add_argument(
        "--decay-exponent",
        type=float,
        default=4.5,
        help="power-law exponent of the in-distribution channels (match training)",
    )
    ap.add_argument("--eps", type=float, default=0.01, help="labeling tolerance")
    ap.add_argument("--pmax-start", type=float, default=-30.0)
    ap.add_argument("--pmax-stop", type=float, default=20.0)
    ap.add_argument("--pmax-step", type=float, default=1.0)
    return ap.parse_args(argv)


def labeled_set(config, master_seed, n_channels, grid, tol):
    samples = []
    for cid in range(n_channels):
        seed = np.random.SeedSequence(entropy=master_seed, spawn_key=(cid,))
        real = generate_scenario(config, seed)
        for pdbw in grid:
            inst = assemble_instance(real, pdbw)
            res = solve_global(inst, MetricKind.WSEE, tol)
            samples.append(
                DatasetSample(
                    channel_id=cid,
                    pmax_dbw=pdbw,
                    features=featurize(inst),
                    labels=label(res.p, inst),
                    objective=res.value,
                )
            )
    return samples


def main(argv=None) -> int:
    args = parse_args(argv)
    mlp = load_model(args.model)
    tol = Tolerance("relative", args.eps)
    n_budgets = int(round((args.pmax_stop - args.pmax_start) / args.pmax_step)) + 1
    grid = [args.pmax_start + k * args.pmax_step for k in range(n_budgets)]

    in_dist = ScenarioConfig(L=args.L, decay_exponent=args.decay_exponent)
    shifted = ScenarioConfig(
        L=args.L, pathloss_model="hata-cost231-urban", shadowing_db=args.shadowing_db
    )
    stats_in = evaluate(mlp, labeled_set(in_dist, args.seed, args.channels, grid, tol))
    stats_sh = evaluate(mlp, labeled_set(shifted, args.shift_seed, args.channels, grid, tol))

    print(f"in-distribution : mean {stats_in.mean:.4g}, median {stats_in.median:.4g}")
    print(f"shifted channels: mean {stats_sh.mean:.4g}, median {stats_sh.median:.4g}")
    ratio = stats_sh.median / stats_in.median if stats_in.median > 0 else np.inf
    print(f"median degradation factor: {ratio:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
