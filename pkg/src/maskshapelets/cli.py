"""Command-line entry point: synth, train, eval, gradcheck, gridsearch, masks."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .baselines import NearestNeighborDTW
from .dataset import DatasetError, load_dataset, znormalize_channels
from .evaluation import error_rate, export_mask_snapshots, export_masks, grid_search
from .gradients import gradcheck
from .model import ModelFormatError, load_model, save_model
from .synthgen import SynthConfig, write_synthetic
from .trainer import CSV_HEADER, NumericalError, TrainConfig, format_record, train

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4

log = logging.getLogger("maskshapelets")


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be a nonnegative integer, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be a nonnegative number, got {text}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError(f"expected nonnegative numbers, got {text!r}")
    return values


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    d = TrainConfig()
    p.add_argument("-K", type=_positive_int, default=d.K, help="number of shapelets")
    p.add_argument("--lmin", type=_positive_int, default=d.L_min, help="shortest shapelet length")
    p.add_argument("--lmax", type=_positive_int, default=d.L_max, help="longest shapelet length")
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, default=d.lam, help="weight decay")
    p.add_argument("--eta", type=_nonneg_float, default=d.eta, help="AdaGrad base learning rate")
    p.add_argument("--iters", type=_nonneg_int, default=d.max_iter, help="passes over the data")
    p.add_argument("--activation", choices=("relu", "sigmoid"), default=d.activation)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--no-masks", action="store_true", help="unmasked baseline (all masks fixed at 1)")
    p.add_argument("--mask-init", choices=("abs", "paper"), default="abs",
                   help="abs: |N(0,1)| (default); paper: N(0,1)")
    p.add_argument("--inner-class-updates", action="store_true",
                   help="update after every class term instead of once per instance")
    p.add_argument("--residual", choices=("exact", "own_score"), default=d.residual,
                   help="score residual used in the gradients")
    p.add_argument("--adagrad-epsilon", type=float, default=d.adagrad_epsilon)
    p.add_argument("--znorm", action="store_true", help="z-normalize every channel of every instance")


def _train_config(args) -> TrainConfig:
    try:
        return TrainConfig(K=args.K, L_min=args.lmin, L_max=args.lmax, lam=args.lam, eta=args.eta,
                           max_iter=args.iters, activation=args.activation, seed=args.seed,
                           mask_init="abs_normal" if args.mask_init == "abs" else "paper_normal",
                           inner_class_updates=args.inner_class_updates,
                           adagrad_epsilon=args.adagrad_epsilon, residual=args.residual,
                           masked=not args.no_masks)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(path, znorm=False):
    # labels are compared by value, so test files may hold classes the model never saw
    ds = load_dataset(path)
    return znormalize_channels(ds) if znorm else ds


def cmd_synth(args) -> int:
    try:
        cfg = SynthConfig(train_size=args.train_size, test_size=args.test_size,
                          num_channels=args.channels, series_length=args.length,
                          pattern_length=args.pattern_length, noise_sd=args.noise_sd, seed=args.seed,
                          placement=args.placement)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train_ds, test_ds = write_synthetic(cfg, args.out_train, args.out_test, args.manifest)
    print(f"wrote {len(train_ds)} train / {len(test_ds)} test instances, "
          f"V={cfg.num_channels}, Q={cfg.series_length}, seed={cfg.seed}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _train_config(args)
    ds = _load(args.data, args.znorm)
    with open(args.log, "w", encoding="utf-8") as log_fh:
        log_fh.write(CSV_HEADER)

        def stream(record, _model):
            log_fh.write(format_record(record, args.wall_time))
            log_fh.flush()

        try:
            model, metrics = train(cfg, ds, snapshot_every=args.mask_snapshots, on_iteration=stream)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    model.metadata["znorm"] = bool(args.znorm)
    save_model(model, args.out_model)
    if args.masks:
        export_masks(model, args.masks)
    if args.mask_snapshots and args.snapshots_out:
        export_mask_snapshots(metrics, args.snapshots_out)
    final = metrics.records[-1].train_error if metrics.records else error_rate(model, ds)
    print(f"train_error={final:.4f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.nn_dtw:
        if args.train_data is None:
            raise UsageError("--nn-dtw needs --train-data")
        train_ds = _load(args.train_data, args.znorm)
        classifier = NearestNeighborDTW(train_ds)
        data = _load(args.data, args.znorm)
        method = "nn-dtw"
    else:
        classifier = load_model(args.model)
        znorm = args.znorm or bool(classifier.metadata.get("znorm", False))
        data = _load(args.data, znorm)
        method = "masked" if classifier.masked else "unmasked"
    try:
        err = error_rate(classifier, data)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"error_rate={err:.3f}")
    if args.report:
        report = {"method": method, "data": str(args.data), "instances": len(data), "error_rate": err}
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    start = time.perf_counter()
    report = gradcheck(trials=args.trials, seed=args.seed, tolerance=args.tolerance,
                       residual=args.residual)
    print(f"trials={report.trials} max_relative_error={report.max_relative_error:.3e} "
          f"tolerance={report.tolerance:g}")
    log.info("gradcheck took %.1f s", time.perf_counter() - start)
    if report.passed:
        return EXIT_OK
    for trial, name, idx, analytic, numeric in report.failures[:20]:
        print(f"FAIL trial={trial} param={name}{list(idx)} analytic={analytic!r} numeric={numeric!r}")
    if len(report.failures) > 20:
        print(f"... {len(report.failures) - 20} more failing coordinates")
    return EXIT_CHECK


def cmd_gridsearch(args) -> int:
    base = _train_config(args)
    ds = _load(args.data, args.znorm)
    try:
        result = grid_search(ds, args.folds, args.k_grid, args.lambda_grid, base)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result.write_csv(args.out)
    best = result.best_cfg
    mean = dict(((K, lam), e) for K, lam, e in result.summary())[(best.K, best.lam)]
    print(f"best K={best.K} lambda={best.lam:g} mean_val_error={mean:.4f}")
    return EXIT_OK


def cmd_masks(args) -> int:
    model = load_model(args.model)
    export_masks(model, args.out)
    print(f"wrote {model.num_shapelets}x{model.num_channels} masks")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maskshapelets", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    d = SynthConfig()
    p = sub.add_parser("synth", help="generate the synthetic benchmark")
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.add_argument("--manifest", help="manifest path (default: <out-train>.manifest.json)")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--train-size", type=_positive_int, default=d.train_size)
    p.add_argument("--test-size", type=_positive_int, default=d.test_size)
    p.add_argument("--channels", type=_positive_int, default=d.num_channels)
    p.add_argument("--length", type=_positive_int, default=d.series_length)
    p.add_argument("--pattern-length", type=_positive_int, default=d.pattern_length)
    p.add_argument("--noise-sd", type=_nonneg_float, default=d.noise_sd)
    p.add_argument("--placement", choices=("independent", "aligned"), default=d.placement)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a shapelet model")
    p.add_argument("--data", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--log", required=True, help="metrics CSV")
    p.add_argument("--masks", help="also write the final activated masks as CSV")
    p.add_argument("--mask-snapshots", type=_nonneg_int, default=0, metavar="N",
                   help="record activated masks every N iterations")
    p.add_argument("--snapshots-out", help="CSV for the mask snapshots")
    p.add_argument("--wall-time", action="store_true", help="fill the seconds column of the log")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="test error of a model or of 1-NN DTW")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--nn-dtw", action="store_true")
    p.add_argument("--train-data")
    p.add_argument("--data", required=True)
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--znorm", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--tolerance", type=_nonneg_float, default=1e-4)
    p.add_argument("--residual", choices=("exact", "own_score"), default="exact")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("gridsearch", help="cross-validated search over K and lambda")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="grid CSV")
    p.add_argument("--folds", type=_positive_int, default=5)
    p.add_argument("--k-grid", type=_int_list, default=[10, 20, 40, 100])
    p.add_argument("--lambda-grid", type=_float_list, default=[0.001, 0.01, 0.1])
    _add_train_flags(p)
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("masks", help="export a model's activated masks as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_masks)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, DatasetError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
