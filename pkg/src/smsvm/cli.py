"""``smsvm`` command line: train, predict, cv, synth, bench."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import OPTIMIZERS, SgdConfig
from .dataset import (DataFormatError, Dataset, augment_bias, generate_synthetic, load_csv,
                      load_libsvm, save_libsvm, standardize_apply, standardize_fit,
                      synthetic_shape, SyntheticSpec)
from .model_eval import (DEFAULT_LAMBDA_GRID, DEFAULT_MU_GRID, Model, ModelFormatError, Trainer,
                         accuracy, fit_model, fold_assignment, format_accuracy, load_model,
                         nested_cv, save_model)
from .objective import Hyperparams, hinge_objective
from .solver import SolverError, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_RANGE = 4
EXIT_FORMAT = 5
EXIT_NUMERIC = 6


class UsageError(Exception):
    pass


class RangeError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _add_data_args(p):
    p.add_argument("--data", required=True, help="input data file")
    p.add_argument("--format", choices=("libsvm", "csv"), default="libsvm")
    p.add_argument("--label-column", default="-1", help="CSV label column (index or name)")
    p.add_argument("--positive-label", default=None,
                   help="label value mapped to +1; everything else becomes -1")
    p.add_argument("--header", action="store_true", help="CSV has a header row")
    p.add_argument("--delimiter", default=",",
                   help="CSV delimiter; 'whitespace' splits on runs of blanks")


def _add_hyper_args(p, grids=False):
    if not grids:
        p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
        p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--alpha0", type=float, default=1.0)
    p.add_argument("--alpha-min", type=float, default=1e-6)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--c1", type=float, default=1e-4)
    p.add_argument("--s-min", type=float, default=2.0**-30)
    p.add_argument("--no-bias", action="store_true", help="do not append a constant-one column")
    p.add_argument("--no-ray-refine", action="store_true",
                   help="plain Armijo halving, without refining the step along the ray")


def _add_sgd_args(p):
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--adam-beta1", type=float, default=0.9)
    p.add_argument("--adam-beta2", type=float, default=0.8)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--epochs", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smsvm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"smsvm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train one model and write it as JSON")
    _add_data_args(p)
    _add_hyper_args(p)
    p.add_argument("--solver", choices=("smsvm", *OPTIMIZERS), default="smsvm")
    _add_sgd_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.add_argument("-v", "--verbose", action="store_true", help="per-iteration CSV trace on stderr")

    p = sub.add_parser("predict", help="print one +1/-1 label per data row")
    p.add_argument("--model", required=True)
    _add_data_args(p)

    p = sub.add_parser("cv", help="nested cross-validation")
    _add_data_args(p)
    _add_hyper_args(p, grids=True)
    p.add_argument("--lambda-grid", type=_float_list, default=list(DEFAULT_LAMBDA_GRID))
    p.add_argument("--mu-grid", type=_float_list, default=list(DEFAULT_MU_GRID))
    p.add_argument("--k", type=int, default=10, help="outer folds")
    p.add_argument("--l", type=int, default=6, help="inner folds")
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--validation-alpha-min", type=float, default=1e-5)
    p.add_argument("--solver", choices=("smsvm", *OPTIMIZERS), default="smsvm")
    _add_sgd_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output", default="cv_report.csv", help="CVReport CSV path")
    p.add_argument("--no-timings", action="store_true", help="leave the seconds column empty")

    p = sub.add_parser("synth", help="write a synthetic two-Gaussian dataset (LIBSVM format)")
    p.add_argument("--shape", choices=("tall", "wide"), default="tall")
    p.add_argument("--m", type=int, default=None, help="override feature count")
    p.add_argument("--n", type=int, default=None, help="override instance count (even)")
    p.add_argument("--scale", type=float, default=None, help="centroid scale (default 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("bench", help="compare smsvm and the SGD baselines on shared folds")
    _add_data_args(p)
    _add_hyper_args(p)
    _add_sgd_args(p)
    p.add_argument("--k", type=int, default=5, help="number of folds")
    p.add_argument("--methods", default="smsvm,nesterov,adadelta,adam")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", default=None, help="also write the table as CSV here")
    p.add_argument("--no-timings", action="store_true", help="leave the seconds column empty")
    return parser


def _hyper(args, lam=None, mu=None) -> Hyperparams:
    try:
        return Hyperparams(lam=args.lam if lam is None else lam, mu=args.mu if mu is None else mu,
                           alpha0=args.alpha0, alpha_min=args.alpha_min, beta=args.beta,
                           eta=args.eta, c1=args.c1, s_min=args.s_min,
                           ray_refine=not args.no_ray_refine)
    except ValueError as exc:
        raise RangeError(str(exc)) from None


def _sgd(args, optimizer: str) -> SgdConfig:
    try:
        return SgdConfig(optimizer=optimizer, learning_rate=args.learning_rate, rho=args.rho,
                         adam_beta1=args.adam_beta1, adam_beta2=args.adam_beta2,
                         epsilon=args.epsilon, batch_size=args.batch_size, epochs=args.epochs,
                         seed=args.seed & (2**64 - 1))
    except ValueError as exc:
        raise RangeError(str(exc)) from None


def _load(args) -> Dataset:
    path = Path(args.data)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    if args.format == "libsvm":
        return load_libsvm(path, positive_label=args.positive_label)
    label = args.label_column
    pos = args.positive_label if args.positive_label is not None else "1"
    delim = None if args.delimiter == "whitespace" else args.delimiter
    return load_csv(path, label_column=label, positive_label=pos, header=args.header,
                    delimiter=delim)


def _require(cond: bool, msg: str):
    if not cond:
        raise RangeError(msg)


def cmd_train(args, out) -> int:
    h = _hyper(args)
    sgd = None if args.solver == "smsvm" else _sgd(args, args.solver)
    d = _load(args)
    trace = None
    if args.verbose:
        err = csv.writer(sys.stderr, lineterminator="\n")
        err.writerow(["alpha", "step", "f_alpha", "n_active", "s"])
        trace = lambda a, k, f, na, s: err.writerow([repr(a), k, repr(f), na, repr(float(s))])
    bias = not args.no_bias
    res = None
    if sgd is None:
        st = standardize_fit(d)
        train = standardize_apply(st, d)
        if bias:
            train = augment_bias(train)
        res = solve(train, h, trace=trace)
        model = Model(w=res.w, standardizer=st, bias_augmented=bias, hyperparams=h)
    else:
        model = fit_model(d, h, bias=bias, sgd=sgd)
        train = standardize_apply(model.standardizer, d)
        if bias:
            train = augment_bias(train)
    save_model(model, args.output)
    f = hinge_objective(model.w, train, h.lam, h.mu)
    print(f"final f: {f:.10g}", file=out)
    print(f"nonzeros: {np.count_nonzero(model.w)} / {model.w.size}", file=out)
    if res is not None:
        levels = [a for a, _, _ in res.history]
        steps = ",".join(str(k) for _, k, _ in res.history)
        print(f"alpha schedule: {levels[0]:.3g} -> {levels[-1]:.3g} ({len(levels)} levels); "
              f"newton steps per level: {steps}", file=out)
    print(f"training accuracy: {format_accuracy(accuracy(model, d))}", file=out)
    return EXIT_OK


def cmd_predict(args, out) -> int:
    path = Path(args.model)
    if not path.is_file():
        raise FileNotFoundError(f"model file not found: {path}")
    model = load_model(path)
    d = _load(args)
    if d.n_features > model.n_raw_features:
        raise DataFormatError(f"data has {d.n_features} features, model expects {model.n_raw_features}")
    X = d.X
    if d.n_features < model.n_raw_features:
        # LIBSVM rows may omit trailing zero features
        X = np.hstack([X, np.zeros((d.n_samples, model.n_raw_features - d.n_features))])
    labels = model.predict_many(X)
    out.write("".join("+1\n" if v > 0 else "-1\n" for v in labels))
    print(f"accuracy: {format_accuracy(float(np.mean(labels == d.y)))}", file=sys.stderr)
    return EXIT_OK


def cmd_cv(args, out) -> int:
    base = _hyper(args, lam=1.0, mu=0.0)
    _require(args.k >= 2 and args.l >= 2, "k and l must be >= 2")
    _require(args.jobs >= 1, "jobs must be >= 1")
    _require(len(args.lambda_grid) > 0 and all(v >= 0 for v in args.lambda_grid),
             "lambda grid must be nonempty and nonnegative")
    _require(len(args.mu_grid) > 0 and all(v >= 0 for v in args.mu_grid),
             "mu grid must be nonempty and nonnegative")
    _require(args.validation_alpha_min > 0, "validation-alpha-min must be > 0")
    sgd = None if args.solver == "smsvm" else _sgd(args, args.solver)
    d = _load(args)
    trainer = Trainer(base=base, sgd=sgd, bias=not args.no_bias,
                      validation_alpha_min=args.validation_alpha_min)
    report = nested_cv(d, args.lambda_grid, args.mu_grid, k=args.k, l=args.l, trainer=trainer,
                       seed=args.seed & (2**64 - 1), stratify=not args.no_stratify,
                       jobs=args.jobs, label=args.solver)
    Path(args.output).write_text(report.to_csv(timings=not args.no_timings), encoding="utf-8")
    print(report.table(), file=out)
    return EXIT_OK


def cmd_synth(args, out) -> int:
    try:
        spec = synthetic_shape(args.shape, seed=args.seed, centroid_scale=args.scale)
        if args.m is not None or args.n is not None:
            spec = SyntheticSpec(m=args.m or spec.m, N=args.n or spec.N,
                                 centroid_scale=args.scale, seed=args.seed)
    except ValueError as exc:
        raise RangeError(str(exc)) from None
    d = generate_synthetic(spec)
    save_libsvm(d, args.output)
    print(f"wrote {spec.N} x {spec.m} dataset to {args.output}", file=out)
    return EXIT_OK


def _bench_fold(d, train_idx, test_idx, method, args_dict):
    args = argparse.Namespace(**args_dict)
    h = _hyper(args)
    sgd = None if method == "smsvm" else _sgd(args, method)
    t0 = time.perf_counter()
    model = fit_model(d.subset(train_idx), h, bias=not args.no_bias, sgd=sgd)
    secs = time.perf_counter() - t0
    return accuracy(model, d.subset(test_idx)), secs, int(np.count_nonzero(model.w))


def bench(d: Dataset, args) -> list[dict]:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        _require(m in ("smsvm", *OPTIMIZERS), f"unknown method {m!r}")
    _require(args.k >= 2, "k must be >= 2")
    _hyper(args)
    for m in methods:
        if m != "smsvm":
            _sgd(args, m)
    folds = fold_assignment(d.y, args.k, args.seed & (2**64 - 1))
    tasks = [(d, np.flatnonzero(folds != i), np.flatnonzero(folds == i), m, vars(args))
             for m in methods for i in range(args.k)]
    if getattr(args, "jobs", 1) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_bench_fold, *zip(*tasks)))
    else:
        results = [_bench_fold(*t) for t in tasks]
    rows = []
    for mi, m in enumerate(methods):
        chunk = results[mi * args.k:(mi + 1) * args.k]
        rows.append({"method": m, "accuracy": float(np.mean([r[0] for r in chunk])),
                     "seconds": float(np.mean([r[1] for r in chunk])),
                     "nnz": float(np.mean([r[2] for r in chunk]))})
    return rows


def cmd_bench(args, out) -> int:
    d = _load(args)
    rows = bench(d, args)
    print(f"{'method':<10}  {'acc':>7}  {'time (s)':>9}  {'nnz':>7}", file=out)
    for r in rows:
        secs = "" if args.no_timings else f"{r['seconds']:.4f}"
        print(f"{r['method']:<10}  {format_accuracy(r['accuracy']):>7}  {secs:>9}  "
              f"{r['nnz']:>7.1f}", file=out)
    if args.csv:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["method", "accuracy", "seconds", "nnz"])
        for r in rows:
            secs = "" if args.no_timings else f"{r['seconds']:.6f}"
            wr.writerow([r["method"], repr(r["accuracy"]), secs, repr(r["nnz"])])
        Path(args.csv).write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "cv": cmd_cv, "synth": cmd_synth,
            "bench": cmd_bench}


def run(argv=None, out=None) -> int:
    """Entry point; returns the process exit code."""
    out = out or sys.stdout
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DataFormatError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (SolverError, FloatingPointError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())
