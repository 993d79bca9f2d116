"""Command-line front end: ``mcod {synth,fit,transform,detect,bench}``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import chain, rng
from .bench import BenchConfig, emit_bar_chart_svg, emit_metadata, emit_report_csv, run_benchmark
from .data import DataError, load_csv, save_csv, standardize_inputs
from .detectors import LofParams, OcsParams, SolverError
from .rho import save_rho_csv, transform
from .strategies import DEFAULT_FB_ROUNDS, Bagging, StrategySpec, detect, parse_method
from .synth import SyntheticSpec, synth_generate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_COMPUTE = 5

DEFAULT_METHODS = "ours+lof,lof-joint,lof-out,fb+lof,ours+ocs,ocs-joint,ocs-out"

EPILOG = f"""\
exit status:
  {EXIT_OK}  success
  {EXIT_USAGE}  usage error (unknown flag, bad value, missing required flag)
  {EXIT_IO}  file missing or unreadable/unwritable
  {EXIT_DATA}  malformed dataset or model file
  {EXIT_COMPUTE}  numerical failure (model fit or one-class SVM solver)
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _u64(text):
    try:
        return rng.check_seed(int(text, 0))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _add_data(p, need_d=True):
    p.add_argument("--data", required=True, help="input CSV; trailing --d columns are outputs")
    p.add_argument("--d", type=int, required=need_d, help="number of output columns")


def _add_fit(p):
    p.add_argument("--lambda", dest="lam", type=float, default=chain.DEFAULT_LAMBDA,
                   help="L2 strength of every logistic factor (default: %(default)s)")
    p.add_argument("--tol", type=float, default=chain.DEFAULT_TOL,
                   help="gradient-norm tolerance (default: %(default)s)")
    p.add_argument("--max-iter", type=int, default=chain.DEFAULT_MAX_ITER,
                   help="optimizer iteration cap (default: %(default)s)")


def _add_detector(p):
    p.add_argument("--k", type=int, default=LofParams().k, help="LOF neighbours (default: %(default)s)")
    p.add_argument("--nu", type=float, default=OcsParams().nu, help="one-class SVM nu (default: %(default)s)")
    p.add_argument("--gamma", type=float, default=None,
                   help="RBF width; default 1/number of features of the scored space")
    p.add_argument("--ocs-tol", type=float, default=OcsParams().solver_tol,
                   help="SMO KKT tolerance (default: %(default)s)")
    p.add_argument("--fb-rounds", type=int, default=DEFAULT_FB_ROUNDS,
                   help="feature-bagging rounds (default: %(default)s)")
    p.add_argument("--no-standardize", action="store_true",
                   help="skip input standardization (default: standardize)")
    p.add_argument("--no-standardize-joint", action="store_true",
                   help="do not rescale the joint [x, y] space (default: rescale)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mcod", description=__doc__, epilog=EPILOG,
                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic dataset and its ground-truth model",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", type=int, default=1000, help="instances (default: %(default)s)")
    p.add_argument("--m", type=int, default=10, help="input dimension (default: %(default)s)")
    p.add_argument("--d", type=int, default=3, help="output dimension (default: %(default)s)")
    p.add_argument("--coeff-scale", type=float, default=1.0,
                   help="chain coefficients ~ U[-s, s] (default: %(default)s)")
    p.add_argument("--clusters", type=int, default=1, help="input Gaussian clusters (default: %(default)s)")
    p.add_argument("--seed", type=_u64, default=0, help="64-bit seed (default: %(default)s)")
    p.add_argument("--out", default="synth.csv", help="dataset CSV (default: %(default)s)")
    p.add_argument("--model-out", default=None, help="ground-truth model (default: <out>.model.txt)")

    p = sub.add_parser("fit", help="fit the chain model", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_data(p)
    _add_fit(p)
    p.add_argument("--no-standardize", action="store_true",
                   help="fit on raw inputs (default: standardize, stored in the model)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="parallel per-dimension fits (default: logical cores)")
    p.add_argument("--out", default="model.txt", help="model file (default: %(default)s)")

    p = sub.add_parser("transform", help="write the per-dimension probability matrix",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_data(p)
    p.add_argument("--model", required=True, help="model file from `fit`")
    p.add_argument("--out", default="rho.csv", help="probability CSV (default: %(default)s)")

    p = sub.add_parser("detect", help="score instances with one strategy", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_data(p)
    p.add_argument("--representation", choices=("joint", "out", "ours"), default="ours",
                   help="space the detector runs in (default: %(default)s)")
    p.add_argument("--detector", choices=("lof", "ocs"), default="lof",
                   help="base detector (default: %(default)s)")
    p.add_argument("--bagging", action="store_true", help="feature bagging over the joint space")
    p.add_argument("--model", default=None, help="model file; required for --representation ours")
    p.add_argument("--seed", type=_u64, default=0, help="feature-bagging seed (default: %(default)s)")
    _add_detector(p)
    p.add_argument("--out", default="scores.csv", help="score CSV (default: %(default)s)")

    p = sub.add_parser("bench", help="run the flip-injection benchmark", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_data(p)
    p.add_argument("--methods", default=DEFAULT_METHODS, help="comma-separated (default: %(default)s)")
    p.add_argument("--repeats", type=int, default=10, help="(default: %(default)s)")
    p.add_argument("--flip-rate", type=float, default=0.01, help="(default: %(default)s)")
    p.add_argument("--seed", type=_u64, default=0, help="master seed (default: %(default)s)")
    p.add_argument("--train-on", choices=("perturbed", "clean"), default="perturbed",
                   help="data the chain model is fit on (default: %(default)s)")
    _add_fit(p)
    _add_detector(p)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="parallel repeats (default: logical cores)")
    p.add_argument("--out", default="report.csv", help="report CSV (default: %(default)s)")
    p.add_argument("--svg", default=None, help="bar chart (default: <out stem>.svg)")
    p.add_argument("--meta", default=None, help="metadata key=value file (default: <out stem>.meta.txt)")
    return ap


def _sibling(path: str, suffix: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + suffix))


def _strategy_kwargs(a) -> dict:
    if a.k < 1:
        raise UsageError("--k must be positive")
    if a.fb_rounds < 1:
        raise UsageError("--fb-rounds must be positive")
    try:
        ocs = OcsParams(a.nu, a.gamma, a.ocs_tol)
    except ValueError as e:
        raise UsageError(str(e)) from None
    return dict(lof=LofParams(a.k), ocs=ocs, standardize_joint=not a.no_standardize_joint)


def _check_fit_args(a):
    if not a.lam > 0 or not a.tol > 0 or a.max_iter < 1:
        raise UsageError("--lambda and --tol must be positive and --max-iter at least 1")


def cmd_synth(a):
    try:
        spec = SyntheticSpec(a.n, a.m, a.d, a.coeff_scale, a.clusters, a.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    ds, truth = synth_generate(spec)
    save_csv(ds, a.out)
    chain.save_model(truth, a.model_out or _sibling(a.out, ".model.txt"))


def cmd_fit(a):
    _check_fit_args(a)
    ds = load_csv(a.data, a.d)
    scaling = None
    if not a.no_standardize:
        ds, scaling = standardize_inputs(ds)
    model = chain.fit_chain(ds, lam=a.lam, tol=a.tol, max_iter=a.max_iter, threads=a.threads)
    for i, dg in enumerate(model.diagnostics):
        logging.info("column %d: objective %.6g, |grad| %.3g, %d iterations",
                     i, dg.objective, dg.grad_norm, dg.iterations)
    chain.save_model(chain.ChainModel(model.order, model.dims, model.m, None, scaling), a.out)


def cmd_transform(a):
    ds = load_csv(a.data, a.d)
    rho = transform(chain.load_model(a.model), ds)
    save_rho_csv(rho, a.out, ds.label_names)


def cmd_detect(a):
    if a.representation == "ours" and a.model is None:
        raise UsageError("--representation ours requires --model")
    if a.bagging and a.representation != "joint":
        raise UsageError("--bagging is only available with --representation joint")
    ds = load_csv(a.data, a.d)
    model = chain.load_model(a.model) if a.representation == "ours" else None
    if not a.no_standardize and model is None:
        ds, _ = standardize_inputs(ds)
    bagging = Bagging(a.fb_rounds, a.seed) if a.bagging else None
    spec = StrategySpec(a.representation, a.detector, bagging=bagging, **_strategy_kwargs(a))
    scores = detect(spec, ds, model)
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_index", "score"])
        for i, s in enumerate(scores):
            w.writerow([i, repr(float(s))])


def cmd_bench(a):
    kw = _strategy_kwargs(a)
    try:
        methods = [parse_method(t, bagging=Bagging(a.fb_rounds), **kw)
                   for t in a.methods.split(",") if t.strip()]
    except ValueError as e:
        raise UsageError(str(e)) from None
    if not methods:
        raise UsageError("--methods is empty")
    if a.repeats < 1:
        raise UsageError("--repeats must be at least 1")
    if not 0 < a.flip_rate <= 1:
        raise UsageError("--flip-rate must lie in (0, 1]")
    _check_fit_args(a)
    ds = load_csv(a.data, a.d)
    cfg = BenchConfig(repeats=a.repeats, flip_rate=a.flip_rate, master_seed=a.seed, lam=a.lam,
                      tol=a.tol, max_iter=a.max_iter, standardize_inputs=not a.no_standardize,
                      train_on=a.train_on, threads=a.threads)
    report = run_benchmark(ds, methods, cfg)
    emit_report_csv(report, a.out)
    emit_bar_chart_svg(report, a.svg or _sibling(a.out, ".svg"))
    emit_metadata(report, a.meta or _sibling(a.out, ".meta.txt"))
    for m in report.methods:
        print(f"{m.name:10s} mean AUC {m.mean:.4f}  se {m.stderr:.4f}")


COMMANDS = {"synth": cmd_synth, "fit": cmd_fit, "transform": cmd_transform,
            "detect": cmd_detect, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[a.command](a)
    except SystemExit as e:
        # argparse exits after --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except UsageError as e:
        print(f"mcod: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"mcod: file error: {e}", file=sys.stderr)
        return EXIT_IO
    except (DataError, UnicodeDecodeError) as e:
        print(f"mcod: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (chain.ChainFitError, SolverError, FloatingPointError) as e:
        print(f"mcod: numerical failure: {e}", file=sys.stderr)
        return EXIT_COMPUTE
    except ValueError as e:
        # remaining ValueErrors come from inconsistent arguments or model/data shapes
        print(f"mcod: invalid input: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"mcod: file error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
