"""Multi-label training, the two-hyperplane decision rule, and the BR baseline."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, ScalerParams
from .kernel import KernelSpec, cross_kernel, fingerprint, within_label_gram
from .solver import (ConvergenceError, KKTReport, LabelSubproblem, SolverConfig,
                     solve)

log = logging.getLogger(__name__)

SCHEMA = "mlpsvm-model/1"

# decision values this close to zero are treated as lying on the hyperplane
TIE_TOL = 1e-9


class TrainingError(ConvergenceError):
    """A label's subproblem failed; carries the label index and its best report."""


@dataclass(frozen=True)
class Hyperparams:
    C1: float = 1.0
    C2: float = 1.0
    kernel: KernelSpec = KernelSpec()
    solver: SolverConfig = SolverConfig()

    def __post_init__(self):
        if not self.C1 > 0:
            raise ValueError(f"C1 must be positive, got {self.C1}")
        if not self.C2 >= 0:
            raise ValueError(f"C2 must be non-negative, got {self.C2}")


@dataclass
class TrainedModel:
    """Per-label pairs of parallel hyperplanes.

    Linear models keep explicit weight rows (``weights``, d x n); kernel models
    keep expansion coefficients ``coef`` (d x s) over stored training rows
    ``vectors`` (s x n).  ``b2`` is ``-inf`` for labels without an upper
    hyperplane (the BR baseline), which reduces the rule to ``f1 >= 0``.
    """

    algorithm: str
    params: Hyperparams
    b1: np.ndarray
    b2: np.ndarray
    degenerate: np.ndarray
    constant: np.ndarray
    n_features: int
    weights: np.ndarray | None = None
    coef: np.ndarray | None = None
    vectors: np.ndarray | None = None
    label_names: tuple = ()
    source: str = ""
    reports: list = field(default_factory=list, repr=False)

    @property
    def n_labels(self) -> int:
        return self.b1.size

    @property
    def explicit(self) -> bool:
        return self.weights is not None

    def max_gap(self) -> float:
        gaps = [r.relative_gap for r in self.reports if r is not None]
        return max(gaps) if gaps else 0.0


def _features(X, model: TrainedModel) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} feature columns, got shape {X.shape}")
    return X


def _projections(model: TrainedModel, X) -> np.ndarray:
    if model.explicit:
        return X @ model.weights.T
    return cross_kernel(X, model.vectors, model.params.kernel) @ model.coef.T


def decision_values(model: TrainedModel, X):
    """Return ``(f1, f2)``, each p x d."""
    X = _features(X, model)
    s = _projections(model, X)
    return s + model.b1, s + model.b2


def decide(f1, f2) -> np.ndarray:
    """Two-hyperplane rule: +1 where f1 >= 0 and f2 <= 0, else -1."""
    return np.where((f1 >= -TIE_TOL) & (f2 <= TIE_TOL), 1, -1).astype(np.int8)


def predict(model: TrainedModel, X) -> np.ndarray:
    f1, f2 = decision_values(model, X)
    out = decide(f1, f2)
    out[:, model.degenerate] = model.constant[model.degenerate]
    return out


def ranking_scores(model: TrainedModel, X) -> np.ndarray:
    """min(f1, -f2) per label; -inf for degenerate labels.

    A 1-D ``X`` gives a length-d vector, a matrix gives p x d.
    """
    single = np.asarray(X).ndim == 1
    f1, f2 = decision_values(model, X)
    scores = np.minimum(f1, -f2)
    scores[:, model.degenerate] = -np.inf
    return scores[0] if single else scores


def _label_columns(data: Dataset):
    Y = np.asarray(data.labels)
    for j in range(Y.shape[1]):
        col = Y[:, j].astype(float)
        yield j, col, bool(np.all(col == col[0]))


def _majority(col) -> int:
    return 1 if np.sum(col > 0) > np.sum(col < 0) else -1


def _run(jobs, fn, items):
    if jobs is None or jobs <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def fit(data: Dataset, params: Hyperparams = Hyperparams(), explicit: bool | None = None,
        jobs: int = 1) -> TrainedModel:
    """Train one MLPSVM subproblem per label."""
    X = np.asarray(data.features, dtype=float)
    m, n = X.shape
    d = data.labels.shape[1]
    kernel = params.kernel
    if explicit is None:
        explicit = kernel.is_linear
    if explicit and not kernel.is_linear:
        raise ValueError("explicit weights need a linear kernel")
    gram = within_label_gram(X, kernel)

    def train(item):
        j, col, single = item
        if single:
            return j, None, None
        sub = LabelSubproblem(col, params.C1, params.C2, gram=gram,
                              features=X if explicit else None, label=j)
        try:
            _, primal, report = solve(sub, params.solver)
        except ConvergenceError as err:
            raise TrainingError(f"label {j} ({data.label_names[j]}) did not converge: {err}",
                                err.dual, err.primal, err.report, j) from err
        return j, primal, report

    results = _run(jobs, train, list(_label_columns(data)))

    b1 = np.zeros(d)
    b2 = np.zeros(d)
    degenerate = np.zeros(d, dtype=bool)
    constant = np.zeros(d, dtype=np.int8)
    weights = np.zeros((d, n)) if explicit else None
    coef = None if explicit else np.zeros((d, m))
    reports = [None] * d
    for j, primal, report in results:
        if primal is None:
            degenerate[j] = True
            constant[j] = _majority(data.labels[:, j])
            continue
        b1[j], b2[j] = primal.b1, primal.b2
        reports[j] = report
        if explicit:
            weights[j] = primal.w
        else:
            coef[j] = primal.coef
    model = TrainedModel(algorithm="mlpsvm", params=params, b1=b1, b2=b2,
                         degenerate=degenerate, constant=constant, n_features=n,
                         weights=weights, label_names=tuple(data.label_names),
                         source=fingerprint(X), reports=reports)
    if not explicit:
        _attach_support(model, coef, X)
    return model


def _attach_support(model: TrainedModel, coef, X):
    keep = np.flatnonzero(np.any(coef != 0, axis=0))
    model.coef = coef[:, keep]
    model.vectors = X[keep]


def fit_br_baseline(data: Dataset, C: float = 1.0, kernel: KernelSpec = KernelSpec(),
                    solver: SolverConfig = SolverConfig(), jobs: int = 1) -> TrainedModel:
    """One soft-margin SVM per label, solved by libsvm through scikit-learn."""
    from sklearn.svm import SVC

    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    X = np.asarray(data.features, dtype=float)
    m, n = X.shape
    d = data.labels.shape[1]
    K = within_label_gram(X, kernel).values

    def train(item):
        j, col, single = item
        if single:
            return j, None
        svc = SVC(C=C, kernel="precomputed", tol=solver.tolerance, shrinking=False,
                  max_iter=-1)
        svc.fit(K, col)
        beta = np.zeros(m)
        # classes_ is sorted, so positive decision values mean +1
        beta[svc.support_] = svc.dual_coef_[0]
        return j, (beta, float(svc.intercept_[0]))

    results = _run(jobs, train, list(_label_columns(data)))
    b1 = np.zeros(d)
    degenerate = np.zeros(d, dtype=bool)
    constant = np.zeros(d, dtype=np.int8)
    coef = np.zeros((d, m))
    for j, res in results:
        if res is None:
            degenerate[j] = True
            constant[j] = _majority(data.labels[:, j])
            continue
        coef[j], b1[j] = res
    params = Hyperparams(C1=C, C2=0.0, kernel=kernel, solver=solver)
    model = TrainedModel(algorithm="br_svm", params=params, b1=b1, b2=np.full(d, -np.inf),
                         degenerate=degenerate, constant=constant, n_features=n,
                         label_names=tuple(data.label_names), source=fingerprint(X),
                         reports=[None] * d)
    if kernel.is_linear:
        model.weights = coef @ X
    else:
        _attach_support(model, coef, X)
    return model


# -- persistence -----------------------------------------------------------

def _num(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _arr(a):
    return None if a is None else [[_num(v) for v in row] for row in np.atleast_2d(a)]


def _unnum(v, missing=-np.inf):
    return missing if v is None else float(v)


def model_to_dict(model: TrainedModel, scaler: ScalerParams | None = None) -> dict:
    p = model.params
    return {
        "schema": SCHEMA,
        "algorithm": model.algorithm,
        "params": {"C1": p.C1, "C2": p.C2, "kernel": p.kernel.to_dict(),
                   "solver": {"tolerance": p.solver.tolerance, "max_iter": p.solver.max_iter,
                              "bias_rule": p.solver.bias_rule, "jitter": p.solver.jitter}},
        "n_features": model.n_features,
        "label_names": list(model.label_names),
        "source": model.source,
        "b1": [_num(v) for v in model.b1],
        "b2": [_num(v) for v in model.b2],
        "degenerate": [bool(v) for v in model.degenerate],
        "constant": [int(v) for v in model.constant],
        "weights": _arr(model.weights),
        "coef": _arr(model.coef),
        "vectors": _arr(model.vectors),
        "scaler": None if scaler is None else {"mean": list(map(float, scaler.mean)),
                                               "scale": list(map(float, scaler.scale))},
        "diagnostics": [None if r is None else r.to_dict() for r in model.reports],
    }


def model_from_dict(d: dict):
    if d.get("schema") != SCHEMA:
        raise ValueError(f"unsupported model schema {d.get('schema')!r}")
    p = d["params"]
    params = Hyperparams(C1=p["C1"], C2=p["C2"], kernel=KernelSpec.from_dict(p["kernel"]),
                         solver=SolverConfig(**p["solver"]))
    mat = lambda v: None if v is None else np.array([[_unnum(x) for x in row] for row in v])
    model = TrainedModel(
        algorithm=d["algorithm"], params=params,
        b1=np.array([_unnum(v) for v in d["b1"]]),
        b2=np.array([_unnum(v) for v in d["b2"]]),
        degenerate=np.array(d["degenerate"], dtype=bool),
        constant=np.array(d["constant"], dtype=np.int8),
        n_features=d["n_features"], weights=mat(d["weights"]), coef=mat(d["coef"]),
        vectors=mat(d["vectors"]), label_names=tuple(d["label_names"]), source=d["source"],
        reports=[None if r is None else KKTReport(**r) for r in d["diagnostics"]])
    s = d.get("scaler")
    scaler = None if s is None else ScalerParams(np.array(s["mean"]), np.array(s["scale"]))
    return model, scaler


def save_model(model: TrainedModel, path, scaler: ScalerParams | None = None):
    # json writes floats with repr(), the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(model_to_dict(model, scaler), indent=1))


def load_model(path):
    """Return ``(model, scaler)``; the scaler is None if none was saved."""
    return model_from_dict(json.loads(Path(path).read_text()))
