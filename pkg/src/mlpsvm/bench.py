"""Cross-validated benchmarks, nested grid search and solver verification campaigns."""

from __future__ import annotations

import datetime as _dt
import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset, apply_scaler, k_fold_split, standardize
from .metrics import NAMES, aggregate, evaluate, format_table
from .model import (Hyperparams, TrainedModel, decide, fit, fit_br_baseline, predict,
                    ranking_scores)
from .solver import (ConvergenceError, SolverConfig, brute_force_primal, kkt_report,
                     recover_primal, solve_dual)
from .synth import random_subproblem

REPORT_SCHEMA = "mlpsvm-report/1"
ALGORITHMS = ("mlpsvm", "br")
DEFAULT_C_GRID = tuple(2.0 ** k for k in range(-4, 5))
DEFAULT_GAMMA_GRID = tuple(2.0 ** k for k in range(-6, 3))


@dataclass(frozen=True)
class RunConfig:
    """What to run.  ``c1_grid``/``c2_grid``/``gamma_grid`` switch on nested selection."""

    algorithms: tuple = ("mlpsvm",)
    params: Hyperparams = Hyperparams()
    folds: int = 5
    seed: int = 0
    jobs: int = 1
    inner_folds: int = 3
    c1_grid: tuple | None = None
    c2_grid: tuple | None = None
    gamma_grid: tuple | None = None
    command: str = "cv-bench"
    data_path: str | None = None
    labels: object = None

    def __post_init__(self):
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"unknown algorithm(s) {bad}; choose from {ALGORITHMS}")
        if self.folds < 2 or self.inner_folds < 2:
            raise ValueError("fold counts must be at least 2")
        for name in ("c1_grid", "c2_grid", "gamma_grid"):
            grid = getattr(self, name)
            if grid is None:
                continue
            if len(grid) == 0:
                raise ValueError(f"{name} is empty")
            if not all(v > 0 for v in grid):
                raise ValueError(f"{name} values must be positive, got {list(grid)}")

    @property
    def searching(self) -> bool:
        return any(g is not None for g in (self.c1_grid, self.c2_grid, self.gamma_grid))

    def to_dict(self) -> dict:
        p = self.params
        return {
            "command": self.command, "data": self.data_path, "labels": self.labels,
            "algorithms": list(self.algorithms), "folds": self.folds, "seed": self.seed,
            "inner_folds": self.inner_folds,
            "params": {"C1": p.C1, "C2": p.C2, "kernel": p.kernel.to_dict(),
                       "tolerance": p.solver.tolerance, "max_iter": p.solver.max_iter},
            "grids": {"C1": _lst(self.c1_grid), "C2": _lst(self.c2_grid),
                      "gamma": _lst(self.gamma_grid)},
        }


def _lst(g):
    return None if g is None else [float(v) for v in g]


@dataclass
class BenchmarkResult:
    reports: dict
    folds: list
    config: RunConfig
    timing: dict = field(default_factory=dict)
    max_gap: float = 0.0

    def table(self) -> str:
        return format_table(self.reports)

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "config": self.config.to_dict(),
            "folds": self.folds,
            "aggregate": {a: r.to_dict() for a, r in self.reports.items()},
            "diagnostics": {"max_relative_gap": self.max_gap},
            "timing": self.timing,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


# -- training one configuration ----------------------------------------------

def train(algorithm: str, data: Dataset, params: Hyperparams, jobs: int = 1) -> TrainedModel:
    if algorithm == "mlpsvm":
        return fit(data, params, jobs=jobs)
    if algorithm == "br":
        return fit_br_baseline(data, params.C1, params.kernel, params.solver, jobs=jobs)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _fold_scores(algorithm, train_set, test_set, params, jobs=1):
    train_std, scaler = standardize(train_set)
    test_std = apply_scaler(scaler, test_set)
    model = train(algorithm, train_std, params, jobs)
    pred = predict(model, test_std.features)
    scores = ranking_scores(model, test_std.features)
    return evaluate(pred, scores, test_std.labels), model.max_gap()


def candidates(config: RunConfig, algorithm: str) -> list:
    """Grid points in tie-break order: smaller C1 first, then C2, then gamma."""
    p = config.params
    c1 = sorted(config.c1_grid) if config.c1_grid is not None else [p.C1]
    c2 = sorted(config.c2_grid) if config.c2_grid is not None else [p.C2]
    if algorithm == "br":
        c2 = [0.0]
    gammas = [None]
    if p.kernel.family == "rbf":
        gammas = sorted(config.gamma_grid) if config.gamma_grid is not None else [p.kernel.gamma]
    out = []
    for a, b, g in itertools.product(c1, c2, gammas):
        kernel = p.kernel if g is None else replace(p.kernel, gamma=g)
        out.append(Hyperparams(C1=a, C2=b, kernel=kernel, solver=p.solver)
                   if algorithm == "mlpsvm" else
                   Hyperparams(C1=a, C2=0.0, kernel=kernel, solver=p.solver))
    return out


def select_params(data: Dataset, config: RunConfig, algorithm: str):
    """Inner cross-validation over the grid; returns ``(best, [(params, mean hamming)])``.

    Only ``data`` is touched, so callers pass a training fold.
    """
    grid = candidates(config, algorithm)
    if len(grid) == 1:
        return grid[0], [(grid[0], float("nan"))]
    plan = k_fold_split(data.m, config.inner_folds, config.seed + 1)
    table = []
    best, best_loss = None, np.inf
    for params in grid:
        losses = []
        for tr, te in plan.folds():
            try:
                res, _ = _fold_scores(algorithm, data.subset(tr), data.subset(te), params)
                losses.append(res["hamming_loss"])
            except ConvergenceError:
                losses.append(np.inf)
        loss = float(np.mean(losses))
        table.append((params, loss))
        # strict comparison keeps the earliest point, i.e. the smaller C1 then C2
        if loss < best_loss:
            best, best_loss = params, loss
    if best is None:
        raise ConvergenceError("no grid point trained on every inner fold")
    return best, table


def _params_dict(p: Hyperparams) -> dict:
    d = {"C1": p.C1, "C2": p.C2}
    if p.kernel.family == "rbf":
        d["gamma"] = p.kernel.gamma
    return d


def run_benchmark(data: Dataset, config: RunConfig) -> BenchmarkResult:
    """k-fold cross-validation, standardizing on each training fold.

    With grids set, parameters are chosen inside each training fold by
    :func:`select_params`.
    """
    t0 = time.perf_counter()
    plan = k_fold_split(data.m, config.folds, config.seed)
    items = [(a, f) for a in config.algorithms for f in range(config.folds)]

    def work(item):
        algorithm, f = item
        train_set = data.subset(plan.train_indices(f))
        test_set = data.subset(plan.test_indices(f))
        params = config.params
        if config.searching:
            params, _ = select_params(train_set, config, algorithm)
        try:
            res, gap = _fold_scores(algorithm, train_set, test_set, params)
        except ConvergenceError as err:
            raise ConvergenceError(f"fold {f}, {algorithm}: {err}", err.dual, err.primal,
                                   err.report, err.label) from err
        return item, res, gap, params

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            done = list(pool.map(work, items))
    else:
        done = [work(it) for it in items]
    # keyed merge so the report does not depend on completion order
    by_key = {item: (res, gap, params) for item, res, gap, params in done}

    reports, folds = {}, []
    max_gap = 0.0
    for a in config.algorithms:
        rows = [by_key[(a, f)][0] for f in range(config.folds)]
        reports[a] = aggregate(rows)
        for f in range(config.folds):
            res, gap, params = by_key[(a, f)]
            max_gap = max(max_gap, gap)
            folds.append({"algorithm": a, "fold": f, "params": _params_dict(params),
                          "metrics": {k: res[k] for k in NAMES}, "skipped": res["skipped"],
                          "max_relative_gap": gap})
    timing = {"total_seconds": time.perf_counter() - t0}
    return BenchmarkResult(reports, folds, config, timing, max_gap)


def grid_search(data: Dataset, config: RunConfig):
    """Nested selection: returns the parameters chosen on all of ``data`` per
    algorithm, plus the outer cross-validated result."""
    if not config.searching:
        config = replace(config, c1_grid=DEFAULT_C_GRID, c2_grid=DEFAULT_C_GRID,
                         gamma_grid=DEFAULT_GAMMA_GRID
                         if config.params.kernel.family == "rbf" else None)
    result = run_benchmark(data, config)
    best = {}
    for a in config.algorithms:
        std, _ = standardize(data)
        best[a] = select_params(std, config, a)[0]
    return best, result


# -- verification campaign --------------------------------------------------

@dataclass
class CampaignSummary:
    count: int
    worst_relative_gap: float = 0.0
    worst_residual: float = 0.0
    worst_objective_diff: float = 0.0
    worst_oracle_gap: float = 0.0
    prediction_mismatches: int = 0
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ok"] = self.ok
        return d


def verify_campaign(count: int = 100, seed: int = 0, m_range=(6, 40), n_range=(1, 5),
                    c_values=(0.1, 1.0, 10.0), tolerance: float = 1e-5,
                    solver: SolverConfig = SolverConfig(tolerance=1e-12)) -> CampaignSummary:
    """Cross-check the dual solver against the primal oracle on random subproblems.

    Instance ``i`` is drawn from ``default_rng([seed, i])``, so any failure is
    reproducible from the pair reported in ``failures``.  The solver runs at
    a tight tolerance because sign agreement of decision values on the
    training points needs the weights, not just the objective, to converge.
    """
    t0 = time.perf_counter()
    out = CampaignSummary(count)
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        sub = random_subproblem(rng, m_range, n_range, c_values, label=i)
        problems = []
        try:
            dual = solve_dual(sub, solver)
            primal = recover_primal(sub, dual, solver)
            report = kkt_report(sub, primal, dual)
            oracle = brute_force_primal(sub)
        except ConvergenceError as err:
            out.failures.append({"seed": [seed, i], "problems": [str(err)]})
            continue
        rel = abs(primal.objective - oracle.objective) / (1.0 + abs(oracle.objective))
        out.worst_relative_gap = max(out.worst_relative_gap, report.relative_gap)
        out.worst_residual = max(out.worst_residual, report.worst_residual())
        out.worst_objective_diff = max(out.worst_objective_diff, rel)
        out.worst_oracle_gap = max(out.worst_oracle_gap, oracle.certificate.relative_gap)
        X = sub.features
        ours = decide(X @ primal.w + primal.b1, X @ primal.w + primal.b2)
        theirs = decide(X @ oracle.w + oracle.b1, X @ oracle.w + oracle.b2)
        mismatched = int(np.sum(ours != theirs))
        if report.relative_gap > tolerance:
            problems.append(f"relative gap {report.relative_gap:.3g}")
        if report.worst_residual() > tolerance:
            problems.append(f"KKT residual {report.worst_residual():.3g}")
        if rel > 1e-4:
            problems.append(f"objective differs from oracle by {rel:.3g}")
        if mismatched:
            out.prediction_mismatches += 1
            problems.append(f"{mismatched} training predictions differ from oracle")
        if problems:
            out.failures.append({"seed": [seed, i], "m": sub.m, "C1": sub.C1, "C2": sub.C2,
                                 "problems": problems})
    out.seconds = time.perf_counter() - t0
    return out

