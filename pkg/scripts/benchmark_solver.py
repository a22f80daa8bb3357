#!/usr/bin/env python3
"""Time the global solver on random scenario instances.

Draws channels from the default network model, solves each at every
requested budget, and reports per-solve wall times.  The first solve
triggers JIT compilation and is excluded from the statistics (reported
separately).

Example:
    python3 scripts/benchmark_solver.py --L 4 --channels 30 --eps 0.01
"""

import argparse
import sys
import time

import numpy as np

from eemax.branch_bound import Tolerance, solve_global
from eemax.model import MetricKind
from eemax.scenario import ScenarioConfig, assemble_instance, generate_scenario


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=4, help="number of links")
    ap.add_argument("--channels", type=int, default=30, help="random channels to draw")
    ap.add_argument("--eps", type=float, default=0.01, help="relative optimality tolerance")
    ap.add_argument("--metric", default="wsee", choices=[k.value for k in MetricKind])
    ap.add_argument("--seed", type=int, default=0, help="master seed")
    ap.add_argument(
        "--pmax-dbw", type=float, nargs="+", default=[-30.0, -10.0, 0.0, 10.0, 20.0],
        help="power budgets to time at (dBW)",
    )
    ap.add_argument("--out", default=None, help="optional per-solve CSV")
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    config = ScenarioConfig(L=args.L)
    tol = Tolerance("relative", args.eps)
    kind = MetricKind.parse(args.metric)

    # Warm-up solve so compilation time is not mixed into the statistics.
    warm = assemble_instance(
        generate_scenario(config, np.random.SeedSequence(entropy=args.seed, spawn_key=(0,))),
        0.0,
    )
    t0 = time.perf_counter()
    solve_global(warm, kind, tol)
    compile_s = time.perf_counter() - t0

    rows = []
    times_ms = []
    iters = []
    for cid in range(args.channels):
        seed = np.random.SeedSequence(entropy=args.seed, spawn_key=(cid,))
        real = generate_scenario(config, seed)
        for pdbw in args.pmax_dbw:
            inst = assemble_instance(real, pdbw)
            t0 = time.perf_counter()
            res = solve_global(inst, kind, tol)
            dt = (time.perf_counter() - t0) * 1e3
            times_ms.append(dt)
            iters.append(res.iterations)
            rows.append([cid, pdbw, f"{dt:.3f}", res.iterations, int(res.certified)])

    times_ms = np.asarray(times_ms)
    print(f"L={args.L} eps={args.eps} metric={kind.value}: {times_ms.size} solves")
    print(f"first solve (incl. JIT compile): {compile_s * 1e3:.0f} ms")
    print(
        f"median {np.median(times_ms):.2f} ms | mean {times_ms.mean():.2f} ms | "
        f"p90 {np.percentile(times_ms, 90):.2f} ms | max {times_ms.max():.2f} ms"
    )
    print(f"iterations: median {int(np.median(iters))}, max {max(iters)}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("channel_id,pmax_dbw,wall_ms,iterations,certified\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
