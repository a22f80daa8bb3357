"""Command-line front end for the power-allocation pipeline.

Subcommands:

- ``solve``   — optimize a single inline-specified instance with the
  global solver, the first-order solver, or a fixed baseline;
- ``dataset`` — generate a labeled dataset: random channels x a grid of
  power budgets, labels from the certified global solver;
- ``train``   — fit the feedforward predictor on a dataset;
- ``eval``    — score a trained model against labeled optima;
- ``sweep``   — method-comparison curves over a power-budget grid.

Powers are decibel-watts on the command line and watts internally.
Every file-producing command writes a JSON run manifest alongside each
output (atomically), capturing the full configuration, seeds, versions,
and timings needed to reproduce the run.  Exit codes: 0 success, 1 usage
error, 2 numerically uncertified result, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .ann import (
    TrainConfig,
    architecture,
    evaluate,
    init,
    load_model,
    predict_powers,
    save_model,
    train,
)
from .branch_bound import SolveResult, Tolerance, solve_global
from .model import MetricKind, ProblemInstance, baseline, objective
from .sca import solve_sca, sweep
from .scenario import (
    DatasetSample,
    ScenarioConfig,
    assemble_instance,
    defeaturize,
    featurize,
    generate_scenario,
    label,
    read_dataset,
    write_dataset,
)

__all__ = ["RunManifest", "main", "cmd_solve", "cmd_dataset", "cmd_train", "cmd_eval", "cmd_sweep"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNCERTIFIED = 2
EXIT_IO = 3

WORKERS_ENV = "EEMAX_WORKERS"

_SOLVERS = ("bb", "sca", "sca-os", "max-power", "best-only")
_SWEEP_METHODS = ("bb", "sca", "sca-os", "ann", "max-power", "best-only")


class UsageError(Exception):
    """Bad command-line input (maps to exit code 1)."""


@dataclass
class RunManifest:
    """Reproducibility record written next to every produced file."""

    command: str
    config: Dict
    seeds: Dict
    version: str
    timings: Dict
    outputs: List[str]

    def write(self, path: str) -> None:
        """Serialize to JSON via a temp file + atomic rename."""
        directory = os.path.dirname(os.path.abspath(path)) or "."
        fd, tmp = tempfile.mkstemp(prefix=".manifest-", suffix=".tmp", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(asdict(self), fh, indent=2, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _manifest_path(output: str) -> str:
    return output + ".manifest.json"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".csv-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Argument plumbing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage failures exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _float_list(text: str) -> List[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _pmax_grid(args) -> List[float]:
    start, stop, step = args.pmax_start, args.pmax_stop, args.pmax_step
    if step <= 0:
        raise UsageError("--pmax-step must be positive")
    if stop < start:
        raise UsageError("--pmax-stop must not be below --pmax-start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(count)]


def _scenario_config(args) -> ScenarioConfig:
    return ScenarioConfig(
        L=args.L,
        area_km=args.area_km,
        n_rx=args.n_rx,
        carrier_ghz=args.carrier_ghz,
        pathloss_model=args.pathloss,
        decay_exponent=args.decay_exponent,
        shadowing_db=args.shadowing_db,
        noise_figure_db=args.noise_figure_db,
        bandwidth_hz=args.bandwidth_hz,
        noise_density_dbm=args.noise_density_dbm,
        seed=args.seed,
    )


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=int, default=4, help="number of links/users")
    p.add_argument("--area-km", type=float, default=2.0, help="service area edge length (km)")
    p.add_argument("--n-rx", type=int, default=2, help="antennas per access point")
    p.add_argument("--carrier-ghz", type=float, default=1.8, help="carrier frequency (GHz)")
    p.add_argument(
        "--pathloss",
        choices=("power-law", "hata-cost231-urban"),
        default="power-law",
        help="propagation model",
    )
    p.add_argument("--decay-exponent", type=float, default=4.5, help="power-law decay exponent")
    p.add_argument(
        "--shadowing-db", type=float, default=0.0, help="log-normal shadowing std dev (dB)"
    )
    p.add_argument("--noise-figure-db", type=float, default=3.0, help="receiver noise figure (dB)")
    p.add_argument("--bandwidth-hz", type=float, default=180e3, help="bandwidth (Hz)")
    p.add_argument(
        "--noise-density-dbm", type=float, default=-174.0, help="noise density (dBm/Hz)"
    )


def _add_link_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", type=float, default=4.0, help="amplifier inefficiency")
    p.add_argument("--pc", type=float, default=1.0, help="static circuit power (W)")


def _add_tolerance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, default=0.01, help="optimality tolerance")
    p.add_argument(
        "--tol-mode", choices=("relative", "absolute"), default="relative", help="tolerance mode"
    )
    p.add_argument("--iter-cap", type=int, default=10_000_000, help="global-solver box cap")
    p.add_argument(
        "--time-cap", type=float, default=None, help="global-solver wall-clock cap (s)"
    )


def _add_grid_flags(p: argparse.ArgumentParser, start=-30.0, stop=20.0, step=1.0) -> None:
    p.add_argument("--pmax-start", type=float, default=start, help="grid start (dBW)")
    p.add_argument("--pmax-stop", type=float, default=stop, help="grid stop (dBW)")
    p.add_argument("--pmax-step", type=float, default=step, help="grid step (dB)")


def _expand_config(argv: List[str]) -> List[str]:
    """Splice `key=value` file entries (flag defaults) in after the subcommand."""
    if not argv or argv[0].startswith("-"):
        return argv
    path = None
    for k, tok in enumerate(argv):
        if tok == "--config" and k + 1 < len(argv):
            path = argv[k + 1]
            break
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
            break
    if path is None:
        return argv
    try:
        lines = open(path, "r", encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    extra: List[str] = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            extra.append(flag if value.lower() == "true" else "--no-" + flag[2:])
        else:
            extra.extend([flag, value])
    return [argv[0], *extra, *argv[1:]]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eemax", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_solve = sub.add_parser("solve", help="optimize one instance")
    p_solve.add_argument("--config", help="key=value file supplying flag defaults")
    p_solve.add_argument("--L", type=int, required=True, help="number of links")
    p_solve.add_argument(
        "--alpha", required=True, help="comma-separated channel-to-noise ratios (linear)"
    )
    p_solve.add_argument(
        "--beta",
        default=None,
        help="comma-separated cross gains, row-major skipping the diagonal "
        "(L*(L-1) values; default all zero)",
    )
    p_solve.add_argument("--mu", default="4", help="amplifier inefficiency (scalar or list)")
    p_solve.add_argument("--pc", default="1", help="circuit power in W (scalar or list)")
    p_solve.add_argument("--weights", default=None, help="link priorities (scalar or list)")
    p_solve.add_argument("--pmax-dbw", default="0", help="power budget in dBW (scalar or list)")
    p_solve.add_argument("--bandwidth-hz", type=float, default=180e3)
    p_solve.add_argument(
        "--metric", choices=[k.value for k in MetricKind], default="wsee", help="objective"
    )
    p_solve.add_argument("--solver", choices=_SOLVERS, default="bb")
    _add_tolerance_flags(p_solve)
    p_solve.add_argument("--out", default=None, help="optional result CSV path")
    p_solve.set_defaults(func=cmd_solve)

    p_data = sub.add_parser("dataset", help="generate a labeled dataset")
    p_data.add_argument("--config", help="key=value file supplying flag defaults")
    p_data.add_argument("--channels", type=int, required=True, help="number of random channels")
    p_data.add_argument("--seed", type=int, default=0, help="master seed")
    _add_scenario_flags(p_data)
    _add_link_flags(p_data)
    _add_grid_flags(p_data)
    _add_tolerance_flags(p_data)
    p_data.add_argument("--clip-m", type=float, default=20.0, help="log-feature clipping bound")
    p_data.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"parallel channel workers (default ${WORKERS_ENV} or 1)",
    )
    p_data.add_argument("--out", required=True, help="dataset CSV path")
    p_data.set_defaults(func=cmd_dataset)

    p_train = sub.add_parser("train", help="train the power predictor")
    p_train.add_argument("--config", help="key=value file supplying flag defaults")
    p_train.add_argument("--dataset", required=True, help="training dataset CSV")
    p_train.add_argument(
        "--val-dataset", default=None, help="validation dataset CSV (overrides --val-channels)"
    )
    p_train.add_argument(
        "--val-channels",
        type=int,
        default=0,
        help="hold out this many trailing channel ids for validation",
    )
    p_train.add_argument(
        "--arch", choices=("standard", "small", "deep-wide"), default="standard"
    )
    p_train.add_argument("--epochs", type=int, default=200)
    p_train.add_argument("--batch-size", type=int, default=128)
    p_train.add_argument("--lr", type=float, default=0.002)
    p_train.add_argument(
        "--lr-decay", type=float, default=1.0, help="per-epoch learning-rate factor"
    )
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument(
        "--augment", action=argparse.BooleanOptionalAction, default=True,
        help="per-batch random user-permutation augmentation",
    )
    p_train.add_argument(
        "--shuffle", action=argparse.BooleanOptionalAction, default=True,
        help="reshuffle training data each epoch",
    )
    p_train.add_argument("--clip-m", type=float, default=20.0)
    p_train.add_argument("--out-model", required=True, help="model file path (.npz)")
    p_train.add_argument("--out-history", required=True, help="loss-history CSV path")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a trained model")
    p_eval.add_argument("--config", help="key=value file supplying flag defaults")
    p_eval.add_argument("--model", required=True, help="model file from `train`")
    p_eval.add_argument("--dataset", required=True, help="labeled test dataset CSV")
    p_eval.add_argument(
        "--metric", choices=[k.value for k in MetricKind], default="wsee", help="objective"
    )
    _add_link_flags(p_eval)
    p_eval.add_argument("--bandwidth-hz", type=float, default=180e3)
    p_eval.add_argument("--clip-m", type=float, default=20.0)
    p_eval.add_argument(
        "--out-prefix", required=True, help="prefix for summary/cdf/pmax CSV outputs"
    )
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="method comparison over a power grid")
    p_sweep.add_argument("--config", help="key=value file supplying flag defaults")
    p_sweep.add_argument("--channels", type=int, required=True, help="number of random channels")
    p_sweep.add_argument("--seed", type=int, default=0, help="master seed")
    p_sweep.add_argument(
        "--methods",
        default="bb,sca,sca-os,max-power,best-only",
        help=f"comma-separated subset of {', '.join(_SWEEP_METHODS)}",
    )
    p_sweep.add_argument("--model", default=None, help="model file (required for method 'ann')")
    _add_scenario_flags(p_sweep)
    _add_link_flags(p_sweep)
    _add_grid_flags(p_sweep, start=-30.0, stop=20.0, step=2.0)
    _add_tolerance_flags(p_sweep)
    p_sweep.add_argument("--clip-m", type=float, default=20.0)
    p_sweep.add_argument("--out", required=True, help="comparison CSV path")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def _broadcast(text: str, L: int, name: str) -> List[float]:
    values = _float_list(text)
    if len(values) == 1:
        return values * L
    if len(values) != L:
        raise UsageError(f"{name} needs 1 or {L} values, got {len(values)}")
    return values


def _instance_from_args(args) -> ProblemInstance:
    L = args.L
    if L < 1:
        raise UsageError("--L must be at least 1")
    alpha = _float_list(args.alpha)
    if len(alpha) != L:
        raise UsageError(f"--alpha needs exactly {L} values, got {len(alpha)}")
    n_beta = L * (L - 1)
    if args.beta is None:
        beta = [0.0] * n_beta
    else:
        beta = _float_list(args.beta)
        if len(beta) != n_beta:
            raise UsageError(f"--beta needs exactly {n_beta} values, got {len(beta)}")
    pmax_dbw = _broadcast(args.pmax_dbw, L, "--pmax-dbw")
    try:
        return ProblemInstance(
            L=L,
            alpha=alpha,
            beta=beta,
            p_max=[10.0 ** (d / 10.0) for d in pmax_dbw],
            mu=_broadcast(args.mu, L, "--mu"),
            p_circuit=_broadcast(args.pc, L, "--pc"),
            weights=None if args.weights is None else _broadcast(args.weights, L, "--weights"),
            bandwidth=args.bandwidth_hz,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _reported_unit(kind: MetricKind) -> str:
    return "Mbit/s" if kind is MetricKind.WSR else "Mbit/Joule"


def cmd_solve(args) -> int:
    inst = _instance_from_args(args)
    kind = MetricKind.parse(args.metric)
    tol = Tolerance(args.tol_mode, args.eps)
    start = time.perf_counter()
    if args.solver == "bb":
        res = solve_global(inst, kind, tol, iter_cap=args.iter_cap, time_cap=args.time_cap)
    elif args.solver in ("sca", "sca-os"):
        if kind is not MetricKind.WSEE:
            raise UsageError("--solver sca/sca-os supports only --metric wsee")
        res, _ = solve_sca(inst)
    else:
        alloc = baseline(inst, args.solver)
        res = SolveResult(
            p=alloc,
            value=objective(alloc, inst, kind),
            iterations=0,
            boxes_created=0,
            peak_queue=0,
            wall_time=time.perf_counter() - start,
            tolerance=None,
            certified=True,
        )
    reported = objective(res.p, inst, kind, normalized=False) / 1e6
    unit = _reported_unit(kind)
    print(f"solver:     {args.solver}")
    print(f"metric:     {kind.value}")
    print(f"powers (W): {' '.join(_fmt(v) for v in res.p.p)}")
    print(f"objective:  {_fmt(res.value)} (normalized)  =  {_fmt(reported)} {unit}")
    print(f"iterations: {res.iterations}   boxes: {res.boxes_created}")
    print(f"time (s):   {res.wall_time:.6f}   certified: {res.certified}")
    if args.out:
        header = (
            ["solver", "metric", "value_normalized", f"value_{unit.replace('/', '_per_')}"]
            + ["iterations", "wall_time_s", "certified"]
            + [f"p_{k}_watts" for k in range(inst.L)]
        )
        row = (
            [args.solver, kind.value, _fmt(res.value), _fmt(reported)]
            + [res.iterations, _fmt(res.wall_time), int(res.certified)]
            + [_fmt(v) for v in res.p.p]
        )
        _write_csv(args.out, header, [row])
        RunManifest(
            command="solve",
            config=_args_snapshot(args),
            seeds={},
            version=__version__,
            timings={"wall_time_s": res.wall_time},
            outputs=[args.out],
        ).write(_manifest_path(args.out))
    return EXIT_OK if res.certified else EXIT_UNCERTIFIED


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------


def _args_snapshot(args) -> Dict:
    snap = {}
    for key, value in sorted(vars(args).items()):
        if key == "func" or callable(value):
            continue
        snap[key] = value
    return snap


def _worker_count(requested: Optional[int]) -> int:
    if requested is not None:
        if requested < 1:
            raise UsageError("--workers must be at least 1")
        return requested
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"${WORKERS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _label_channel(task) -> Tuple[int, List[Tuple[Optional[DatasetSample], bool, float]]]:
    """Solve every grid point of one channel; used by dataset workers."""
    (channel_id, cfg_kwargs, master_seed, grid, mu, pc, bandwidth, tol_mode, eps,
     clip_m, iter_cap, time_cap) = task
    config = ScenarioConfig(**cfg_kwargs)
    seed = np.random.SeedSequence(entropy=master_seed, spawn_key=(channel_id,))
    real = generate_scenario(config, seed)
    tol = Tolerance(tol_mode, eps)
    out: List[Tuple[Optional[DatasetSample], bool, float]] = []
    for pdbw in grid:
        t0 = time.perf_counter()
        try:
            inst = assemble_instance(real, pdbw, mu=mu, p_circuit=pc, bandwidth=bandwidth)
            res = solve_global(inst, MetricKind.WSEE, tol, iter_cap=iter_cap, time_cap=time_cap)
            sample = DatasetSample(
                channel_id=channel_id,
                pmax_dbw=pdbw,
                features=featurize(inst, clip_m),
                labels=label(res.p, inst, clip_m),
                objective=res.value,
            )
            out.append((sample, res.certified, time.perf_counter() - t0))
        except Exception:
            out.append((None, False, time.perf_counter() - t0))
    return channel_id, out


def cmd_dataset(args) -> int:
    if args.channels < 1:
        raise UsageError("--channels must be at least 1")
    config = _scenario_config(args)
    grid = _pmax_grid(args)
    workers = _worker_count(args.workers)
    cfg_kwargs = asdict(config)
    cfg_kwargs["ap_positions"] = tuple(tuple(xy) for xy in cfg_kwargs["ap_positions"])
    tasks = [
        (
            cid, cfg_kwargs, args.seed, grid, args.mu, args.pc, args.bandwidth_hz,
            args.tol_mode, args.eps, args.clip_m, args.iter_cap, args.time_cap,
        )
        for cid in range(args.channels)
    ]
    start = time.perf_counter()
    if workers == 1:
        results = [_label_channel(t) for t in tasks]
    else:
        import multiprocessing as mp

        with mp.Pool(processes=workers) as pool:
            results = pool.map(_label_channel, tasks)
    results.sort(key=lambda pair: pair[0])

    samples: List[DatasetSample] = []
    solve_times: List[float] = []
    flagged = 0
    for _, rows in results:
        for sample, certified, dt in rows:
            solve_times.append(dt)
            if sample is None or not certified:
                flagged += 1
            if sample is not None:
                samples.append(sample)
    write_dataset(samples, args.out)
    total = time.perf_counter() - start
    times_ms = np.asarray(solve_times) * 1e3
    RunManifest(
        command="dataset",
        config=_args_snapshot(args),
        seeds={"master": args.seed, "per_channel_spawn_key": "channel_id"},
        version=__version__,
        timings={
            "total_s": total,
            "solve_ms_median": float(np.median(times_ms)),
            "solve_ms_mean": float(np.mean(times_ms)),
            "solve_ms": [round(t, 3) for t in times_ms.tolist()],
        },
        outputs=[args.out],
    ).write(_manifest_path(args.out))
    print(
        f"dataset: {len(samples)} samples ({args.channels} channels x {len(grid)} budgets) "
        f"-> {args.out}"
    )
    print(
        f"solve time: median {np.median(times_ms):.1f} ms, mean {np.mean(times_ms):.1f} ms; "
        f"flagged {flagged}"
    )
    return EXIT_OK if flagged == 0 else EXIT_UNCERTIFIED


# ---------------------------------------------------------------------------
# train / eval
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    samples = read_dataset(args.dataset)
    if not samples:
        raise UsageError(f"--dataset {args.dataset} holds no samples")
    L = samples[0].L
    if args.val_dataset is not None:
        train_set = samples
        val_set = read_dataset(args.val_dataset)
        if val_set and val_set[0].L != L:
            raise UsageError("--val-dataset has a different link count than --dataset")
    elif args.val_channels > 0:
        ids = sorted({s.channel_id for s in samples})
        if args.val_channels >= len(ids):
            raise UsageError("--val-channels must leave at least one training channel")
        held = set(ids[-args.val_channels :])
        train_set = [s for s in samples if s.channel_id not in held]
        val_set = [s for s in samples if s.channel_id in held]
    else:
        train_set, val_set = samples, []

    sizes, acts = architecture(L, args.arch)
    mlp = init(sizes, acts, seed=args.seed)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        lr_decay=args.lr_decay,
        shuffle=args.shuffle,
        augment=args.augment,
        seed=args.seed + 1,
        clip_m=args.clip_m,
    )
    start = time.perf_counter()
    trained, history = train(mlp, train_set, val_set, cfg)
    elapsed = time.perf_counter() - start

    save_model(trained, args.out_model)
    rows = [
        [epoch, _fmt(history[epoch, 0]), _fmt(history[epoch, 1])]
        for epoch in range(history.shape[0])
    ]
    _write_csv(args.out_history, ["epoch", "train_mse", "val_mse"], rows)
    manifest = RunManifest(
        command="train",
        config=_args_snapshot(args),
        seeds={"init": args.seed, "schedule": args.seed + 1},
        version=__version__,
        timings={"train_s": elapsed},
        outputs=[args.out_model, args.out_history],
    )
    manifest.write(_manifest_path(args.out_model))
    manifest.write(_manifest_path(args.out_history))
    final_val = history[-1, 1]
    print(
        f"trained {args.arch} ({'->'.join(str(s) for s in sizes)}) for {args.epochs} epochs "
        f"on {len(train_set)} samples in {elapsed:.1f} s"
    )
    print(f"final train MSE {history[-1, 0]:.6g}, val MSE {final_val:.6g}")
    return EXIT_OK


def cmd_eval(args) -> int:
    mlp = load_model(args.model)
    samples = read_dataset(args.dataset)
    if not samples:
        raise UsageError(f"--dataset {args.dataset} holds no samples")
    L = samples[0].L
    if mlp.n_outputs != L:
        raise UsageError(
            f"model predicts {mlp.n_outputs} links but the dataset has {L}"
        )
    kind = MetricKind.parse(args.metric)
    start = time.perf_counter()
    stats = evaluate(
        mlp, samples, kind, mu=args.mu, p_circuit=args.pc, bandwidth=args.bandwidth_hz,
        clip_m=args.clip_m,
    )

    # Per-budget curve: mean optimal vs. mean predicted objective.
    by_pmax: Dict[float, List[Tuple[float, float]]] = {}
    for s in samples:
        inst = defeaturize(
            s.features, L, mu=args.mu, p_circuit=args.pc, bandwidth=args.bandwidth_hz
        )
        pred = predict_powers(mlp, inst, args.clip_m)
        by_pmax.setdefault(s.pmax_dbw, []).append((s.objective, objective(pred, inst, kind)))
    elapsed = time.perf_counter() - start

    out_summary = args.out_prefix + ".summary.csv"
    out_cdf = args.out_prefix + ".cdf.csv"
    out_pmax = args.out_prefix + ".pmax.csv"
    _write_csv(
        out_summary,
        ["samples", "skipped", "mean_rel_error", "median_rel_error"],
        [[stats.errors.size, stats.skipped, _fmt(stats.mean), _fmt(stats.median)]],
    )
    _write_csv(
        out_cdf,
        ["rel_error", "cum_fraction"],
        [[_fmt(x), _fmt(y)] for x, y in zip(stats.cdf_x, stats.cdf_y)],
    )
    pmax_rows = []
    for pdbw in sorted(by_pmax):
        pairs = np.asarray(by_pmax[pdbw])
        pmax_rows.append(
            [_fmt(pdbw), len(pairs), _fmt(pairs[:, 0].mean()), _fmt(pairs[:, 1].mean())]
        )
    _write_csv(
        out_pmax, ["pmax_dbw", "samples", "mean_optimal", "mean_predicted"], pmax_rows
    )
    manifest = RunManifest(
        command="eval",
        config=_args_snapshot(args),
        seeds={},
        version=__version__,
        timings={"eval_s": elapsed},
        outputs=[out_summary, out_cdf, out_pmax],
    )
    for out in (out_summary, out_cdf, out_pmax):
        manifest.write(_manifest_path(out))
    print(
        f"eval on {stats.errors.size} samples (skipped {stats.skipped}): "
        f"mean rel error {stats.mean:.4g}, median {stats.median:.4g}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    methods = [tok.strip() for tok in args.methods.split(",") if tok.strip()]
    if not methods:
        raise UsageError("--methods must name at least one method")
    for m in methods:
        if m not in _SWEEP_METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(_SWEEP_METHODS)}")
    mlp = None
    if "ann" in methods:
        if args.model is None:
            raise UsageError("method 'ann' requires --model pointing to a trained model file")
        mlp = load_model(args.model)
    config = _scenario_config(args)
    grid = _pmax_grid(args)
    tol = Tolerance(args.tol_mode, args.eps)
    bandwidth = args.bandwidth_hz
    scale = bandwidth / 1e6  # normalized objective -> Mbit/joule

    rows = []
    any_uncertified = False
    start = time.perf_counter()
    for cid in range(args.channels):
        seed = np.random.SeedSequence(entropy=args.seed, spawn_key=(cid,))
        real = generate_scenario(config, seed)
        template = assemble_instance(real, 0.0, mu=args.mu, p_circuit=args.pc, bandwidth=bandwidth)
        per_method: Dict[str, List[float]] = {}
        for m in methods:
            if m in ("sca", "sca-os"):
                mode = "double-init" if m == "sca" else "one-shot"
                res_list = sweep(template, grid, mode=mode)
                per_method[m] = [r.value * scale for r in res_list]
            else:
                vals = []
                for pdbw in grid:
                    inst = template.with_p_max(10.0 ** (pdbw / 10.0))
                    if m == "bb":
                        res = solve_global(
                            inst, MetricKind.WSEE, tol, iter_cap=args.iter_cap,
                            time_cap=args.time_cap,
                        )
                        any_uncertified = any_uncertified or not res.certified
                        vals.append(res.value * scale)
                    elif m == "ann":
                        pred = predict_powers(mlp, inst, args.clip_m)
                        vals.append(objective(pred, inst, MetricKind.WSEE) * scale)
                    else:
                        alloc = baseline(inst, m)
                        vals.append(objective(alloc, inst, MetricKind.WSEE) * scale)
                per_method[m] = vals
        for gi, pdbw in enumerate(grid):
            rows.append(
                [cid, _fmt(pdbw)] + [_fmt(per_method[m][gi]) for m in methods]
            )
    elapsed = time.perf_counter() - start
    header = ["channel_id", "pmax_dbw"] + [f"{m}_mbit_per_joule" for m in methods]
    _write_csv(args.out, header, rows)
    RunManifest(
        command="sweep",
        config=_args_snapshot(args),
        seeds={"master": args.seed, "per_channel_spawn_key": "channel_id"},
        version=__version__,
        timings={"total_s": elapsed},
        outputs=[args.out],
    ).write(_manifest_path(args.out))
    print(
        f"sweep: {args.channels} channels x {len(grid)} budgets x {len(methods)} methods "
        f"-> {args.out} ({elapsed:.1f} s)"
    )
    return EXIT_OK if not any_uncertified else EXIT_UNCERTIFIED


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config(argv)
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse --help (0) or usage failure (1)
        code = exc.code
        if code is None:
            return EXIT_OK
        return code if isinstance(code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, PermissionError, IsADirectoryError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
