import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from orthoreg.core.config import Settings
from orthoreg.core.errors import AppError, GradientCheckError
from orthoreg.core.logging import configure_logging
from orthoreg.data.idx import load_idx, mnist_paths
from orthoreg.data.preprocess import standardize, upsample
from orthoreg.data.weightfile import read_weight_file
from orthoreg.services.anglestats import summarize
from orthoreg.services.experiments import (
    MODE_ARMS,
    Direction,
    SweepConfig,
    SweepParameter,
    ToyConfig,
    loss_curves,
    mnist_layer_sizes,
    run_bound_comparison,
    run_mnist,
    run_mode_comparison,
    run_sweep,
    run_toy,
    sweep_summary,
    toy_summary,
)
from orthoreg.services.gradcheck import run_gradcheck
from orthoreg.services.nn import TrainConfig
from orthoreg.services.records import RunRecord, arm_summary
from orthoreg.services.regularizer import RegConfig, RegMode
from orthoreg.storage.filesystem import render_json, write_csv, write_json

logger = logging.getLogger(__name__)

TOY_HEADER = ["step", "mean_nn_angle_deg", "min_angle_deg", "loss"]
TRAIN_HEADER = [
    "epoch",
    "train_loss",
    "reg_loss",
    "train_err_pct",
    "test_err_pct",
    "overfit_gap_pct",
]
BOUND_HEADER = [
    "seed",
    "initial_min_angle_deg",
    "global_min_angle_deg",
    "local_min_angle_deg",
    "gap_deg",
]


def _csv_numbers(raw: str):
    try:
        values = [float(item) for item in raw.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected numbers, got {raw!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def _layer_list(raw: str):
    """1-based layer numbers ("1,2") to 0-based indices."""
    try:
        layers = [int(item) for item in raw.split(",") if item.strip()]
    except ValueError as exc:
        message = f"expected layer numbers, got {raw!r}"
        raise argparse.ArgumentTypeError(message) from exc
    if not layers or min(layers) < 1:
        raise argparse.ArgumentTypeError("layer numbers start at 1")
    return tuple(layer - 1 for layer in layers)


def _artifact_path(args, stem: str, suffix: str):
    return Path(args.output_dir) / f"{stem}.{suffix}"


def _write_table(args, stem: str, header: list[str], rows):
    rows = [list(row) for row in rows]
    if args.format == "json":
        path = _artifact_path(args, stem, "json")
        write_json(path, [dict(zip(header, row)) for row in rows])
    else:
        path = _artifact_path(args, stem, "csv")
        write_csv(path, header, rows)
    logger.info("artifact_written path=%s rows=%s", path, len(rows))
    return path


def _write_summary(args, stem: str, payload):
    path = _artifact_path(args, stem, "json")
    write_json(path, payload)
    logger.info("artifact_written path=%s", path)
    return path


def _file_stem(label: str):
    return label.replace("=", "").replace(",", "_")


def cmd_toy2d(args, settings: Settings) -> int:
    cfg = ToyConfig(
        n_vectors=args.n,
        dims=2,
        steps=args.steps,
        step_size=(
            settings.toy_step_size if args.step_size is None else args.step_size
        ),
        mode=args.mode,
        direction=args.direction,
        lam=args.lam,
        seed=args.seed,
        n_bins=args.bins,
    )
    records = run_toy(cfg)
    rows = [
        (
            r.step,
            r.mean_nn_angle(),
            r.angle_stats["l1"].min_pairwise_angle,
            r.losses["reg"],
        )
        for r in records
    ]
    stem = f"toy2d_{cfg.mode.value}_{cfg.direction.value}_seed{cfg.seed}"
    _write_table(args, stem, TOY_HEADER, rows)
    _write_summary(args, f"{stem}_summary", toy_summary(records))
    return 0


def cmd_bound_compare(args, settings: Settings) -> int:
    summary = run_bound_comparison(
        n=args.n,
        d=args.d,
        steps=args.steps,
        step_size=(
            settings.bound_step_size if args.step_size is None else args.step_size
        ),
        seeds=[args.seed + offset for offset in range(args.seeds)],
        lam=args.lam,
    )
    rows = [
        (
            row.seed,
            row.initial_min_angle,
            row.global_min_angle,
            row.local_min_angle,
            row.gap,
        )
        for row in summary.rows
    ]
    stem = f"bound_n{args.n}_d{args.d}"
    _write_table(args, stem, BOUND_HEADER, rows)
    _write_summary(args, f"{stem}_summary", summary.payload())
    return 0


def _train_config(args, gamma: float = 0.0) -> TrainConfig:
    reg = RegConfig(
        mode=args.mode,
        gamma=gamma,
        lam=args.lam,
        restore_magnitudes=args.restore,
        normalize_reg_grad=args.normalize_reg_grad,
    )
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        reg=reg,
        regularized_layers=args.reg_layers,
        seed=args.seed,
    )


def _load_mnist(args, settings: Settings):
    data_dir = args.data_dir or settings.data_dir
    train_set = load_idx(*mnist_paths(data_dir, "train"))
    test_set = load_idx(*mnist_paths(data_dir, "test"))
    if args.train_limit:
        train_set = train_set.subset(args.train_limit)
    if args.upsample32:
        train_set = upsample(train_set, 32)
        test_set = upsample(test_set, 32)
    train_set, stats = standardize(train_set)
    test_set, _ = standardize(test_set, stats)
    logger.info(
        "mnist_ready train=%s test=%s features=%s mean=%.5f std=%.5f",
        train_set.n_examples,
        test_set.n_examples,
        train_set.n_features,
        stats.mean,
        stats.std,
    )
    return train_set, test_set


def epoch_rows(records: list[RunRecord]):
    layers = list(records[0].angle_stats)
    header = TRAIN_HEADER + [f"mean_nn_angle_{layer}" for layer in layers]
    rows = [
        [
            r.step,
            r.losses["task"],
            r.losses["reg"],
            r.train_err_pct,
            r.test_err_pct,
            r.overfit_gap_pct,
        ]
        + [r.mean_nn_angle(layer) for layer in layers]
        for r in records
    ]
    return header, rows


def _write_arms(args, prefix: str, runs: dict[str, list[RunRecord]]):
    for label, records in runs.items():
        header, rows = epoch_rows(records)
        _write_table(args, f"{prefix}_{_file_stem(label)}", header, rows)
    summary = {label: arm_summary(records) for label, records in runs.items()}
    _write_summary(args, f"{prefix}_summary", summary)


def _workers(args, settings: Settings):
    return args.workers or settings.workers


def cmd_mnist(args, settings: Settings) -> int:
    cfg = _train_config(args)
    gammas = args.gamma or settings.gamma_grid_values()
    train_set, test_set = _load_mnist(args, settings)
    layer_sizes = mnist_layer_sizes(train_set.n_features, args.hidden, args.layers)
    runs = run_mnist(
        cfg, gammas, train_set, test_set, layer_sizes, _workers(args, settings)
    )
    _write_arms(args, "mnist", runs)
    return 0


def cmd_mode_compare(args, settings: Settings) -> int:
    cfg = _train_config(args, gamma=args.gamma)
    train_set, test_set = _load_mnist(args, settings)
    layer_sizes = mnist_layer_sizes(train_set.n_features, args.hidden, args.layers)
    runs = run_mode_comparison(
        cfg, train_set, test_set, layer_sizes, _workers(args, settings)
    )
    _write_arms(args, "mode", runs)
    return 0


def _sweep_values(args, settings: Settings):
    if args.values:
        return tuple(item.strip() for item in args.values.split(",") if item.strip())
    if args.parameter == SweepParameter.GAMMA:
        grid = settings.gamma_grid_values()
    elif args.parameter == SweepParameter.LAMBDA:
        grid = settings.lambda_grid_values()
    else:
        return MODE_ARMS
    return tuple(f"{value:g}" for value in grid)


def cmd_sweep(args, settings: Settings) -> int:
    sweep = SweepConfig(
        parameter=args.parameter,
        values=_sweep_values(args, settings),
        base_train=_train_config(args, gamma=args.gamma),
        repeats=args.repeats,
    )
    train_set, test_set = _load_mnist(args, settings)
    layer_sizes = mnist_layer_sizes(train_set.n_features, args.hidden, args.layers)
    runs = run_sweep(sweep, train_set, test_set, layer_sizes, _workers(args, settings))
    rows = sweep_summary(sweep, runs)
    header = list(rows[0])
    stem = f"sweep_{sweep.parameter.value}"
    _write_table(args, stem, header, [[row[key] for key in header] for row in rows])
    _write_summary(
        args,
        f"{stem}_arms",
        {label: arm_summary(records) for label, records in runs.items()},
    )
    return 0


def cmd_curves(args, settings: Settings) -> int:
    lams = args.lambda_values or settings.lambda_grid_values()
    header, rows = loss_curves(lams, args.points)
    _write_table(args, "curves", header, rows)
    return 0


def cmd_analyze(args, settings: Settings) -> int:
    theta = read_weight_file(args.weights)
    stats = summarize(theta, args.bins)
    payload = {
        "n": int(theta.shape[0]),
        "d": int(theta.shape[1]),
        "min_pairwise_angle_deg": stats.min_pairwise_angle,
        "mean_nn_angle_deg": stats.mean_nn_angle,
        "histogram": stats.histogram_payload(),
    }
    sys.stdout.write(render_json(payload))
    return 0


def cmd_gradcheck(args, settings: Settings) -> int:
    report = run_gradcheck(trials=args.trials, seed=args.seed)
    for line in report.lines():
        print(line)
    if not report.passed(args.tol):
        failing = {
            name: value for name, value in report.worst().items() if value >= args.tol
        }
        raise GradientCheckError(
            f"Gradient check failed at tol={args.tol:g}: "
            + json.dumps(failing, sort_keys=True),
            details={"tol": args.tol, "failing": failing},
        )
    return 0


def _shared_parser(settings: Settings):
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=settings.seed)
    parser.add_argument("--output-dir", default=settings.output_dir)
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def _training_parser():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--data-dir", default=None)
    parser.add_argument("--lambda", dest="lam", type=float, default=10.0)
    parser.add_argument(
        "--mode", choices=[m.value for m in RegMode], default=RegMode.LOCAL.value
    )
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--batch", type=int, default=200)
    parser.add_argument("--lr", type=float, default=0.05)
    parser.add_argument("--hidden", type=int, default=1024)
    parser.add_argument("--layers", type=int, default=3)
    parser.add_argument("--upsample32", action="store_true")
    parser.add_argument("--train-limit", type=int, default=None)
    parser.add_argument("--reg-layers", type=_layer_list, default=None)
    parser.add_argument(
        "--restore", action=argparse.BooleanOptionalAction, default=True
    )
    parser.add_argument("--normalize-reg-grad", action="store_true")
    parser.add_argument("--workers", type=int, default=None)
    return parser


def build_parser(settings: Settings):
    shared = _shared_parser(settings)
    training = _training_parser()
    parser = argparse.ArgumentParser(
        prog="orthoreg", description="Weight decorrelation experiments."
    )
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=settings.log_level.upper(),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    toy = sub.add_parser("toy2d", parents=[shared], help="2-D toy dynamics")
    toy.add_argument("--n", type=int, default=30)
    toy.add_argument("--steps", type=int, default=300)
    toy.add_argument(
        "--mode", choices=[m.value for m in RegMode], default=RegMode.LOCAL.value
    )
    toy.add_argument(
        "--direction",
        choices=[d.value for d in Direction],
        default=Direction.DESCENT.value,
    )
    toy.add_argument("--lambda", dest="lam", type=float, default=10.0)
    toy.add_argument("--step-size", type=float, default=None)
    toy.add_argument("--bins", type=int, default=36)
    toy.set_defaults(handler=cmd_toy2d)

    bound = sub.add_parser(
        "bound-compare", parents=[shared], help="global vs local minimum angle"
    )
    bound.add_argument("--n", type=int, default=64)
    bound.add_argument("--d", type=int, default=32)
    bound.add_argument("--steps", type=int, default=300)
    bound.add_argument("--step-size", type=float, default=None)
    bound.add_argument("--seeds", type=int, default=5)
    bound.add_argument("--lambda", dest="lam", type=float, default=10.0)
    bound.set_defaults(handler=cmd_bound_compare)

    mnist = sub.add_parser("mnist", parents=[shared, training], help="gamma study")
    mnist.add_argument("--gamma", type=float, action="append", default=None)
    mnist.set_defaults(handler=cmd_mnist)

    modes = sub.add_parser(
        "mode-compare", parents=[shared, training], help="loss function study"
    )
    modes.add_argument("--gamma", type=float, default=1.0)
    modes.set_defaults(handler=cmd_mode_compare)

    sweep = sub.add_parser(
        "sweep", parents=[shared, training], help="sensitivity sweep"
    )
    sweep.add_argument(
        "--parameter", choices=[p.value for p in SweepParameter], required=True
    )
    sweep.add_argument("--values", default=None)
    sweep.add_argument("--repeats", type=int, default=3)
    sweep.add_argument("--gamma", type=float, default=1.0)
    sweep.set_defaults(handler=cmd_sweep)

    curves = sub.add_parser("curves", parents=[shared], help="loss vs angle table")
    curves.add_argument("--lambda-values", type=_csv_numbers, default=None)
    curves.add_argument("--points", type=int, default=181)
    curves.set_defaults(handler=cmd_curves)

    analyze = sub.add_parser("analyze", help="angle statistics of a weight file")
    analyze.add_argument("--weights", required=True)
    analyze.add_argument("--bins", type=int, default=36)
    analyze.set_defaults(handler=cmd_analyze)

    check = sub.add_parser("gradcheck", help="finite-difference gradient check")
    check.add_argument("--trials", type=int, default=20)
    check.add_argument("--seed", type=int, default=settings.seed)
    check.add_argument("--tol", type=float, default=1e-6)
    check.set_defaults(handler=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    try:
        settings = Settings()
        args = build_parser(settings).parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except ValidationError as exc:
        print(f"orthoreg: invalid configuration: {exc}", file=sys.stderr)
        return 2

    configure_logging(args.log_level)
    try:
        return args.handler(args, settings)
    except (ValidationError, argparse.ArgumentTypeError) as exc:
        print(f"orthoreg {args.command}: {exc}", file=sys.stderr)
        return 2
    except AppError as exc:
        logger.warning("command_failed command=%s code=%s", args.command, exc.code)
        print(f"orthoreg {args.command}: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except Exception:
        logger.exception("command_crashed command=%s", args.command)
        return 1
