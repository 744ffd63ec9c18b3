"""Command-line entry point: ``python -m mlpsvm <command> ...``.

Exit codes: 0 success, 2 bad configuration or input, 3 a solver did not
converge, 4 a verification check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .dataset import ArffError, apply_scaler, dump_csv, load_arff, standardize, write_arff
from .kernel import KernelSpec, within_label_gram
from .metrics import evaluate
from .model import Hyperparams, load_model, predict, ranking_scores, save_model
from .solver import (DUAL_FORM, ConvergenceError, LabelSubproblem, SolverConfig,
                     brute_force_primal, solve)
from .synth import generate_annuli, generate_crossing

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_VERIFY = 0, 2, 3, 4

log = logging.getLogger("mlpsvm")


class VerificationFailed(Exception):
    pass


def _labels_arg(text):
    if text is None:
        return None
    text = text.strip()
    if text.isdigit():
        return int(text)
    return [t.strip() for t in text.split(",") if t.strip()]


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _range(text):
    lo, hi = (int(t) for t in text.split(":"))
    return lo, hi


def _data_opts(p, required=True):
    p.add_argument("--data", required=required, help="ARFF file")
    p.add_argument("--labels", help="number of trailing label attributes, or name,name,...")
    p.add_argument("--xml", help="MULAN XML file listing the label names")


def _model_opts(p):
    p.add_argument("--algo", choices=["mlpsvm", "br", "both"], default="mlpsvm")
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--kernel", choices=["linear", "rbf", "poly"], default="linear")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--coef0", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlpsvm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on an ARFF file")
    _data_opts(p)
    _model_opts(p)
    p.add_argument("--out", help="where to write the model JSON")
    p.add_argument("--verify", action="store_true",
                   help="cross-check each label against the primal oracle (linear, m <= 200)")
    p.add_argument("--dump-csv", help="also write the loaded matrices as CSV")

    p = sub.add_parser("predict", help="apply a saved model")
    p.add_argument("--model", required=True)
    _data_opts(p)
    p.add_argument("--out", help="CSV of predictions (default: stdout)")

    for name, text in (("cv-bench", "k-fold cross-validation"),
                       ("grid-search", "k-fold cross-validation with nested grid search")):
        p = sub.add_parser(name, help=text)
        _data_opts(p)
        _model_opts(p)
        p.add_argument("--folds", type=int, default=5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="report JSON")
        if name == "grid-search":
            p.add_argument("--c1-grid", type=_floats)
            p.add_argument("--c2-grid", type=_floats)
            p.add_argument("--gamma-grid", type=_floats)
            p.add_argument("--inner-folds", type=int, default=3)

    p = sub.add_parser("synth", help="write a synthetic dataset as ARFF")
    p.add_argument("--kind", choices=["crossing", "annuli"], default="crossing")
    p.add_argument("--n-per-strip", type=int, default=50)
    p.add_argument("--m", type=int, default=400, help="instance count for annuli")
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="random solver-versus-oracle campaign")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m-range", type=_range, default=(6, 40))
    p.add_argument("--n-range", type=_range, default=(1, 5))
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--out")
    return parser


def _load(args):
    labels = _labels_arg(args.labels)
    if labels is None and args.xml is None:
        raise ValueError("--labels or --xml is required")
    return load_arff(args.data, labels, xml=args.xml)


def _params(args) -> Hyperparams:
    kernel = KernelSpec(args.kernel, gamma=args.gamma, degree=args.degree, coef0=args.coef0)
    return Hyperparams(C1=args.c1, C2=args.c2, kernel=kernel,
                       solver=SolverConfig(tolerance=args.tol, max_iter=args.max_iter))


def _algorithms(args):
    return ("mlpsvm", "br") if args.algo == "both" else (args.algo,)


def _emit(text, path=None):
    if path:
        Path(path).write_text(text)
    else:
        print(text)


def cmd_train(args):
    data = _load(args)
    if args.dump_csv:
        dump_csv(data, args.dump_csv)
    algos = _algorithms(args)
    if len(algos) != 1:
        raise ValueError("train takes a single --algo")
    params = _params(args)
    std, scaler = standardize(data)
    model = bench.train(algos[0], std, params, jobs=args.jobs)
    if args.out:
        save_model(model, args.out, scaler)
    print(json.dumps({"labels": model.n_labels, "degenerate": int(model.degenerate.sum()),
                      "max_relative_gap": model.max_gap()}))
    if args.verify:
        _verify_labels(std, params)


def _verify_labels(data, params):
    """Print one JSON line per label and fail if the oracle disagrees."""
    failed = []
    X = np.asarray(data.features)
    for j in range(data.d):
        y = data.labels[:, j].astype(float)
        line = {"label": data.label_names[j], "form": DUAL_FORM}
        if np.all(y == y[0]):
            line["status"] = "degenerate"
            print(json.dumps(line))
            continue
        if params.kernel.is_linear:
            sub = LabelSubproblem(y, params.C1, params.C2, features=X, label=j)
        else:
            sub = LabelSubproblem(y, params.C1, params.C2, label=j,
                                  gram=within_label_gram(X, params.kernel))
        _, primal, report = solve(sub, params.solver)
        line["kkt"] = report.to_dict()
        if params.kernel.is_linear and sub.m <= 200:
            oracle = brute_force_primal(sub, params.solver)
            diff = abs(primal.objective - oracle.objective) / (1 + abs(oracle.objective))
            line["oracle_objective"] = oracle.objective
            line["objective_difference"] = diff
            if diff > 1e-4:
                failed.append(j)
        else:
            line["oracle"] = "skipped (needs a linear kernel and m <= 200)"
        if not report.ok(max(10 * params.solver.tolerance, 1e-5)):
            failed.append(j)
        print(json.dumps(line))
    if failed:
        raise VerificationFailed(f"labels {sorted(set(failed))} failed verification")


def cmd_predict(args):
    model, scaler = load_model(args.model)
    labels = _labels_arg(args.labels)
    if labels is None and args.xml is None:
        labels = list(model.label_names)
    data = load_arff(args.data, labels, xml=args.xml)
    X = data.features if scaler is None else apply_scaler(scaler, data.features)
    pred = predict(model, X)
    lines = [",".join(model.label_names)] + [",".join(str(int(v)) for v in row) for row in pred]
    _emit("\n".join(lines), args.out)
    res = evaluate(pred, ranking_scores(model, X), data.labels)
    print(json.dumps(res), file=sys.stderr)


def _bench_config(args, searching):
    kw = {}
    if searching:
        kw = dict(c1_grid=args.c1_grid or bench.DEFAULT_C_GRID,
                  c2_grid=args.c2_grid or bench.DEFAULT_C_GRID,
                  gamma_grid=(args.gamma_grid or bench.DEFAULT_GAMMA_GRID)
                  if args.kernel == "rbf" else None,
                  inner_folds=args.inner_folds)
    return bench.RunConfig(algorithms=_algorithms(args), params=_params(args), folds=args.folds,
                           seed=args.seed, jobs=args.jobs, command=args.command,
                           data_path=str(args.data), labels=args.labels or args.xml, **kw)


def cmd_bench(args):
    data = _load(args)
    searching = args.command == "grid-search"
    config = _bench_config(args, searching)
    if searching:
        best, result = bench.grid_search(data, config)
        print(json.dumps({a: {"C1": p.C1, "C2": p.C2, "kernel": p.kernel.to_dict()}
                          for a, p in best.items()}))
    else:
        result = bench.run_benchmark(data, config)
    print(result.table())
    if args.out:
        Path(args.out).write_text(result.to_json())


def cmd_synth(args):
    if args.kind == "crossing":
        data = generate_crossing(args.n_per_strip, args.noise, args.seed)
    else:
        data = generate_annuli(args.m, args.seed)
    write_arff(data, args.out)
    print(json.dumps({"m": data.m, "n": data.n, "d": data.d, "out": args.out}))


def cmd_verify(args):
    summary = bench.verify_campaign(args.count, args.seed, args.m_range, args.n_range,
                                    tolerance=args.tol)
    text = json.dumps(summary.to_dict(), indent=1)
    _emit(text, args.out)
    if args.out:
        print(json.dumps({k: v for k, v in summary.to_dict().items() if k != "failures"}))
    if not summary.ok:
        raise VerificationFailed(f"{len(summary.failures)} of {summary.count} instances failed")


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "cv-bench": cmd_bench,
            "grid-search": cmd_bench, "synth": cmd_synth, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except VerificationFailed as err:
        print(f"verification failed: {err}", file=sys.stderr)
        return EXIT_VERIFY
    except ConvergenceError as err:
        print(f"convergence failure: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, ArffError, FileNotFoundError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
