"""Acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line with the measured
numbers, so ``pytest -s tests/test_acceptance.py`` doubles as a scorecard.
Criteria 6 and 7 need the MULAN Emotions and Yeast files; point
``MLPSVM_DATA`` at a directory holding ``emotions.arff`` and ``yeast.arff``.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from mlpsvm import metrics
from mlpsvm.bench import DEFAULT_C_GRID, DEFAULT_GAMMA_GRID, RunConfig, run_benchmark, select_params
from mlpsvm.dataset import Dataset, apply_scaler, k_fold_split, load_arff, standardize
from mlpsvm.kernel import KernelSpec
from mlpsvm.model import Hyperparams, fit, fit_br_baseline, predict
from mlpsvm.bench import verify_campaign
from mlpsvm.solver import LabelSubproblem, SolverConfig, solve
from mlpsvm.synth import crossing_strip, generate_annuli, generate_crossing

TIGHT = SolverConfig(tolerance=1e-12)


def verdict(n, ok, detail):
    print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def data_file(name):
    root = os.environ.get("MLPSVM_DATA")
    path = Path(root) / name if root else None
    if path is None or not path.exists():
        return None, f"{name} not available (set MLPSVM_DATA to a directory containing it)"
    return path, ""


def held_out_hamming(train, test, algorithm, cfg):
    tr, scaler = standardize(train)
    te = apply_scaler(scaler, test)
    params, _ = select_params(tr, cfg, algorithm)
    if algorithm == "mlpsvm":
        model = fit(tr, params)
    else:
        model = fit_br_baseline(tr, params.C1, params.kernel, params.solver)
    pred = predict(model, te.features)
    return metrics.hamming_loss(pred, te.labels), pred, params


def test_criterion_1_duality_gap_suite():
    s = verify_campaign(200, seed=0, solver=SolverConfig())
    ok = (s.worst_relative_gap <= 1e-5 and s.worst_residual <= 1e-5 and s.seconds < 120
          and not [f for f in s.failures if "objective" not in str(f) and "prediction" not in str(f)])
    verdict(1, ok, f"gap {s.worst_relative_gap:.2e}, KKT {s.worst_residual:.2e}, "
                   f"{s.seconds:.1f}s for 200 instances")


def test_criterion_2_oracle_equivalence():
    s = verify_campaign(200, seed=0)
    ok = s.worst_objective_diff <= 1e-4 and s.prediction_mismatches == 0 and s.ok
    verdict(2, ok, f"objective diff {s.worst_objective_diff:.2e}, "
                   f"{s.prediction_mismatches} instances with differing predictions")


def test_criterion_3_c2_zero_reduces_to_br():
    worst_w = worst_b = 0.0
    for i in range(20):
        rng = np.random.default_rng([3, i])
        m, n = int(rng.integers(15, 41)), int(rng.integers(1, 6))
        X = rng.standard_normal((m, n))
        Y = np.where(X @ rng.standard_normal((n, 3)) + 0.7 * rng.standard_normal((m, 3)) > 0, 1, -1)
        Y[0], Y[1] = 1, -1
        data = Dataset(X, Y)
        C = float(rng.choice([0.1, 1.0, 10.0]))
        mlp = fit(data, Hyperparams(C1=C, C2=0.0, solver=TIGHT))
        br = fit_br_baseline(data, C, solver=SolverConfig(tolerance=1e-10))
        worst_w = max(worst_w, float(np.max(np.abs(mlp.weights - br.weights))))
        worst_b = max(worst_b, float(np.max(np.abs(mlp.b1 - br.b1))))
    verdict(3, worst_w <= 1e-5 and worst_b <= 1e-5, f"max |dw| {worst_w:.2e}, max |db1| {worst_b:.2e}")


def test_criterion_4_c2_monotonicity():
    worst = -np.inf
    for i in range(20):
        rng = np.random.default_rng([4, i])
        m, n = int(rng.integers(6, 41)), int(rng.integers(1, 6))
        X = rng.standard_normal((m, n))
        y = np.where(rng.standard_normal(m) > 0, 1.0, -1.0)
        y[0], y[1] = 1.0, -1.0
        C1 = float(rng.choice([0.1, 1.0, 10.0]))
        sums = [float(np.sum(solve(LabelSubproblem(y, C1, c2, features=X), TIGHT)[1].alpha))
                for c2 in (0.01, 0.1, 1.0, 10.0)]
        worst = max(worst, max(b - a for a, b in zip(sums, sums[1:])))
    verdict(4, worst <= 1e-7, f"largest increase of sum(alpha) {worst:.2e}")


def test_criterion_5_crossing_superiority():
    data = generate_crossing(200, 0.05, seed=0)
    plan = k_fold_split(data.m, 3, seed=0)
    train, test = data.subset(plan.train_indices(0)), data.subset(plan.test_indices(0))
    cfg = RunConfig(c1_grid=DEFAULT_C_GRID, c2_grid=DEFAULT_C_GRID)
    mlp, pred, _ = held_out_hamming(train, test, "mlpsvm", cfg)
    br, _, _ = held_out_hamming(train, test, "br", cfg)
    strip = crossing_strip(test.features)
    spurious = int(np.sum(pred[np.isin(strip, [0, 3]), 1] > 0) + np.sum(pred[strip == 2, 0] > 0))
    verdict(5, mlp < br and spurious == 0,
            f"hamming mlpsvm {mlp:.4f} vs br {br:.4f}, {spurious} spurious labels on pure strips")


def _mulan_cv(name, d):
    path, why = data_file(name)
    if path is None:
        return None, why
    data = load_arff(path, d)
    cfg = RunConfig(algorithms=("mlpsvm", "br"), folds=5, jobs=os.cpu_count() or 1,
                    c1_grid=DEFAULT_C_GRID, c2_grid=DEFAULT_C_GRID)
    return run_benchmark(data, cfg), ""


def test_criterion_6_emotions_band():
    t0 = time.perf_counter()
    res, why = _mulan_cv("emotions.arff", 6)
    if res is None:
        verdict(6, False, why)
    a = res.reports["mlpsvm"].mean["hamming_loss"]
    b = res.reports["br"].mean["hamming_loss"]
    verdict(6, 0.19 <= a <= 0.27 and 0.21 <= b <= 0.29,
            f"hamming mlpsvm {a:.3f}, br {b:.3f} ({time.perf_counter() - t0:.0f}s)")


def test_criterion_7_yeast_one_error():
    res, why = _mulan_cv("yeast.arff", 14)
    if res is None:
        verdict(7, False, why)
    a = res.reports["mlpsvm"].mean["one_error"]
    b = res.reports["br"].mean["one_error"]
    verdict(7, a < b, f"one-error mlpsvm {a:.3f} vs br {b:.3f}")


def test_criterion_8_metric_suite():
    pred = np.array([[1, -1, 1], [-1, -1, 1]])
    truth = np.array([[1, 1, -1], [-1, -1, 1]])
    exact = (metrics.hamming_loss(pred, truth) == 2 / 6
             and metrics.precision(pred, truth) == 0.75 and metrics.recall(pred, truth) == 0.75
             and metrics.one_error(np.array([[0.9, 0.1, 0.5], [0.2, 0.1, 0.3]]), truth) == 0.0)
    rng = np.random.default_rng(8)
    bounded = True
    for _ in range(10_000):
        m, d = rng.integers(1, 8), rng.integers(1, 6)
        p = rng.choice([-1, 1], size=(m, d))
        t = rng.choice([-1, 1], size=(m, d))
        s = rng.normal(size=(m, d))
        vals = metrics.evaluate(p, s, t)
        bounded &= all(0.0 <= vals[k] <= 1.0 for k in metrics.NAMES)
    verdict(8, exact and bounded, f"examples exact {exact}, 10^4 random cases bounded {bounded}")


def test_criterion_9_rbf_on_annuli():
    train, test = generate_annuli(800, seed=0), generate_annuli(800, seed=1)
    rbf_cfg = RunConfig(params=Hyperparams(kernel=KernelSpec("rbf", gamma=1.0)),
                        c1_grid=(1.0, 10.0, 100.0), c2_grid=(0.01, 0.1), gamma_grid=(1.0, 4.0))
    rbf, _, chosen = held_out_hamming(train, test, "mlpsvm", rbf_cfg)
    lin, _, _ = held_out_hamming(train, test, "mlpsvm",
                                 RunConfig(params=Hyperparams(C1=10.0, C2=0.1)))
    verdict(9, rbf <= 0.05 and lin > 0.2,
            f"rbf {rbf:.4f} (C1={chosen.C1}, C2={chosen.C2}, gamma={chosen.kernel.gamma}), "
            f"linear {lin:.4f}")
