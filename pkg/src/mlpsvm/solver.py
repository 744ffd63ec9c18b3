"""Per-label MLPSVM subproblem: dual solve, primal recovery, KKT checks.

For one label with signs ``y`` and positive set ``P`` the primal is

    min  0.5 |w|^2 + C1 sum(delta) + C2 sum(alpha)
    s.t. y_i (w.x_i + b1) >= 1 - delta_i,      delta >= 0
         2 (w.x_i + b2) + alpha_i = 0, i in P, alpha >= 0

and its Lagrangian dual (multipliers ``eta`` for the hinge rows, ``theta``
for the equality rows) is

    max  -0.5 eta'Q eta + eta'R theta - 0.5 theta'S theta + sum(eta)
    s.t. 0 <= eta <= C1, sum(y eta) = 0, theta >= -C2, sum_P theta = 0

with Q = yy'K, R = y(1+y)'K and S = (1+y)(1+y)'K.  The weight vector is
``w = sum_i (eta_i y_i - theta_i (1 + y_i)) x_i``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from . import _smo
from .kernel import GramMatrix, KernelSpec, within_label_gram

log = logging.getLogger(__name__)

DUAL_FORM = "concave: -1/2 theta'S theta; w = sum(eta y x) - sum(theta (1+y) x)"


class ConvergenceError(RuntimeError):
    """A solve stopped before meeting its tolerance.

    ``dual``/``primal``/``report`` carry the best iterate when one exists.
    """

    def __init__(self, message, dual=None, primal=None, report=None, label=None):
        super().__init__(message)
        self.dual = dual
        self.primal = primal
        self.report = report
        self.label = label


@dataclass(frozen=True)
class SolverConfig:
    """``max_iter`` counts sweeps; one sweep is m pair steps."""

    tolerance: float = 1e-6
    max_iter: int = 100_000
    bias_rule: str = "average"
    jitter: bool = True

    def __post_init__(self):
        if not 0 < self.tolerance <= 1e-2:
            raise ValueError(f"tolerance must lie in (0, 1e-2], got {self.tolerance}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.bias_rule not in ("average", "single"):
            raise ValueError(f"unknown bias rule {self.bias_rule!r}")


@dataclass(frozen=True, eq=False)
class LabelSubproblem:
    """One label's training view.

    At least one of ``gram`` and ``features`` must be given; the primal
    oracle and explicit-weight recovery need ``features`` (linear kernel).
    """

    signs: np.ndarray
    C1: float
    C2: float
    gram: GramMatrix | None = None
    features: np.ndarray | None = None
    label: int = 0

    def __post_init__(self):
        y = np.asarray(self.signs, dtype=float)
        if y.ndim != 1 or not np.all(np.abs(y) == 1):
            raise ValueError("signs must be a vector over {-1, +1}")
        object.__setattr__(self, "signs", y)
        if not self.C1 > 0:
            raise ValueError(f"C1 must be positive, got {self.C1}")
        if not self.C2 >= 0:
            raise ValueError(f"C2 must be non-negative, got {self.C2}")
        if self.gram is None and self.features is None:
            raise ValueError("need a Gram matrix or raw features")
        if self.features is not None:
            X = np.asarray(self.features, dtype=float)
            if X.ndim != 2 or X.shape[0] != y.size:
                raise ValueError("features must have one row per sign")
            object.__setattr__(self, "features", X)
        if self.gram is not None and self.gram.size != y.size:
            raise ValueError("Gram matrix size does not match the sign vector")

    @property
    def m(self) -> int:
        return self.signs.size

    @property
    def positives(self) -> np.ndarray:
        return np.flatnonzero(self.signs > 0)

    @property
    def kernel(self) -> KernelSpec:
        return self.gram.spec if self.gram is not None else KernelSpec("linear")

    @property
    def K(self) -> np.ndarray:
        if self.gram is None:
            object.__setattr__(self, "gram", within_label_gram(self.features, KernelSpec("linear")))
        return self.gram.values

    @property
    def explicit(self) -> bool:
        """Whether an explicit weight vector can be formed."""
        return self.features is not None and self.kernel.is_linear


@dataclass
class DualSolution:
    eta: np.ndarray
    theta: np.ndarray  # length m, zero off the positive set
    objective: float
    iterations: int = 0
    jitter: float = 0.0
    form: str = DUAL_FORM


@dataclass
class KKTReport:
    stationarity: float
    primal_feasibility: float
    dual_feasibility: float
    complementarity: float
    gap: float
    relative_gap: float
    primal_objective: float
    dual_objective: float

    def worst_residual(self) -> float:
        return max(self.stationarity, self.primal_feasibility,
                   self.dual_feasibility, self.complementarity)

    def ok(self, tol: float) -> bool:
        return self.worst_residual() <= tol and self.relative_gap <= tol

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


@dataclass
class PrimalSolution:
    """Recovered primal point; ``alpha`` has length m and is zero off P."""

    b1: float
    b2: float
    delta: np.ndarray
    alpha: np.ndarray
    objective: float
    w: np.ndarray | None = None
    coef: np.ndarray | None = None
    certificate: KKTReport | None = field(default=None, repr=False)


def expansion(sub: LabelSubproblem, eta, theta) -> np.ndarray:
    y = sub.signs
    return y * eta - (1.0 + y) * theta


def dual_objective(sub: LabelSubproblem, eta, theta) -> float:
    v = expansion(sub, eta, theta)
    return float(-0.5 * v @ (sub.K @ v) + np.sum(eta))


def _scores(sub: LabelSubproblem, primal: PrimalSolution) -> np.ndarray:
    if primal.w is not None and sub.features is not None:
        return sub.features @ primal.w
    return sub.K @ primal.coef


def _weight_norm_sq(sub: LabelSubproblem, primal: PrimalSolution) -> float:
    if primal.w is not None:
        return float(primal.w @ primal.w)
    return float(primal.coef @ (sub.K @ primal.coef))


def primal_objective(sub: LabelSubproblem, primal: PrimalSolution) -> float:
    return (0.5 * _weight_norm_sq(sub, primal)
            + sub.C1 * float(np.sum(primal.delta)) + sub.C2 * float(np.sum(primal.alpha)))


def minimal_slacks(sub: LabelSubproblem, scores, b1, b2):
    """Smallest slacks making (w, b1, b2) feasible for the hinge and equality rows."""
    y = sub.signs
    delta = np.maximum(0.0, 1.0 - y * (scores + b1))
    alpha = np.zeros(sub.m)
    P = sub.positives
    alpha[P] = -2.0 * (scores[P] + b2)
    return delta, alpha


def upper_bias(sub: LabelSubproblem, scores) -> float:
    """Largest b2 keeping every positive on or below the upper hyperplane."""
    return float(-np.max(scores[sub.positives]))


def hinge_bias_interval(scores, y) -> tuple[float, float]:
    """Interval of b minimizing sum(max(0, 1 - y (scores + b))) for fixed scores."""
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(y, dtype=float)
    knots = np.unique(y - scores)
    vals = np.maximum(0.0, 1.0 - y[None, :] * (scores[None, :] + knots[:, None])).sum(1)
    best = vals.min()
    flat = knots[vals <= best + 1e-9 * (1.0 + best)]
    return float(flat.min()), float(flat.max())


def _bias_b1(sub: LabelSubproblem, eta, scores, config: SolverConfig) -> float:
    y = sub.signs
    C1 = sub.C1
    slack = 1e-10 * C1
    free = (eta > slack) & (eta < C1 - slack)
    votes = y - scores
    if np.any(free):
        if config.bias_rule == "single":
            return float(votes[np.flatnonzero(free)[0]])
        return float(votes[free].mean())
    # no free support vector: midpoint of the interval the KKT conditions allow
    at_zero = eta <= slack
    at_top = eta >= C1 - slack
    lower = np.concatenate([votes[at_zero & (y > 0)], votes[at_top & (y < 0)]])
    upper = np.concatenate([votes[at_top & (y > 0)], votes[at_zero & (y < 0)]])
    lo = lower.max() if lower.size else -np.inf
    hi = upper.min() if upper.size else np.inf
    if not np.isfinite(lo):
        lo = hi
    if not np.isfinite(hi):
        hi = lo
    log.info("label %d: no free support vector, b1 from KKT interval [%g, %g]", sub.label, lo, hi)
    return float(0.5 * (lo + hi))


def _bias_b2(sub: LabelSubproblem, theta, scores) -> float:
    P = sub.positives
    top = upper_bias(sub, scores)
    if sub.C2 == 0:
        return top
    witnesses = P[theta[P] > -sub.C2 * (1.0 - 1e-12)]
    if witnesses.size == 0:
        raise ConvergenceError(f"label {sub.label}: no witness for b2")
    # clamp keeps every positive on the feasible side of the upper hyperplane
    return min(float(np.mean(-scores[witnesses])), top)


def recover_primal(sub: LabelSubproblem, dual: DualSolution,
                   config: SolverConfig = SolverConfig()) -> PrimalSolution:
    v = expansion(sub, dual.eta, dual.theta)
    w = sub.features.T @ v if sub.explicit else None
    primal = PrimalSolution(b1=0.0, b2=0.0, delta=np.zeros(sub.m), alpha=np.zeros(sub.m),
                            objective=0.0, w=w, coef=v)
    scores = _scores(sub, primal)
    primal.b1 = _bias_b1(sub, dual.eta, scores, config)
    primal.b2 = _bias_b2(sub, dual.theta, scores)
    primal.delta, primal.alpha = minimal_slacks(sub, scores, primal.b1, primal.b2)
    primal.objective = primal_objective(sub, primal)
    return primal


def kkt_report(sub: LabelSubproblem, primal: PrimalSolution, dual: DualSolution) -> KKTReport:
    y = sub.signs
    P = sub.positives
    offP = y < 0
    eta, theta = dual.eta, dual.theta
    v = expansion(sub, eta, theta)

    if primal.w is not None and sub.features is not None:
        r_w = float(np.linalg.norm(primal.w - sub.features.T @ v))
    else:
        diff = primal.coef - v
        r_w = float(np.sqrt(max(0.0, diff @ (sub.K @ diff))))
    w_norm = np.sqrt(max(0.0, _weight_norm_sq(sub, primal)))
    stationarity = max(r_w / (1.0 + w_norm),
                       abs(float(eta @ y)) / (1.0 + sub.C1),
                       abs(float(theta[P].sum())) / (1.0 + sub.C2))

    s = _scores(sub, primal)
    f1 = s + primal.b1
    f2 = s + primal.b2
    delta, alpha = primal.delta, primal.alpha
    pfeas = max(0.0,
                float(np.max(1.0 - delta - y * f1)),
                float(np.max(-delta)),
                float(np.max(-alpha[P], initial=0.0)),
                float(np.max(np.abs(2.0 * f2[P] + alpha[P]), initial=0.0)),
                float(np.max(np.abs(alpha[offP]), initial=0.0)))
    dfeas = max(0.0,
                float(np.max(-eta)),
                float(np.max(eta - sub.C1)),
                float(np.max(-sub.C2 - theta[P], initial=0.0)),
                float(np.max(np.abs(theta[offP]), initial=0.0)))

    p_obj = primal_objective(sub, primal)
    d_obj = dual_objective(sub, eta, theta)
    scale = 1.0 + abs(p_obj)
    comp = (np.abs(eta * (y * f1 - 1.0 + delta)).sum()
            + np.abs((sub.C1 - eta) * delta).sum()
            + np.abs((sub.C2 + theta[P]) * alpha[P]).sum())
    gap = p_obj - d_obj
    return KKTReport(stationarity=stationarity, primal_feasibility=pfeas,
                     dual_feasibility=dfeas, complementarity=float(comp) / scale,
                     gap=gap, relative_gap=gap / scale,
                     primal_objective=p_obj, dual_objective=d_obj)


def _check_two_classes(sub: LabelSubproblem):
    npos = int(np.sum(sub.signs > 0))
    if npos == 0 or npos == sub.m:
        raise ValueError(f"label {sub.label}: subproblem needs both classes")


def solve_dual(sub: LabelSubproblem, config: SolverConfig = SolverConfig()) -> DualSolution:
    """Maximize the per-label dual to a certified relative duality gap."""
    _check_two_classes(sub)
    K = np.ascontiguousarray(sub.K, dtype=np.float64)
    y = sub.signs
    pos = sub.positives.astype(np.int64)
    m = sub.m
    eta = np.zeros(m)
    theta = np.zeros(m)
    g = np.zeros(m)
    use_theta = sub.C2 > 0 and pos.size > 1
    jitter = 0.0
    eps = 1e-3
    used = 0
    budget = config.max_iter * m
    best = None
    while True:
        status, it, viol = _smo.pair_descent(K, y, pos, float(sub.C1), float(sub.C2), use_theta,
                                             eta, theta, g, eps, budget - used)
        used += it
        if status == _smo.STATUS_INDEFINITE:
            if not config.jitter or jitter > 0:
                raise ConvergenceError(f"label {sub.label}: kernel matrix is not positive semidefinite")
            jitter = 1e-10 * np.trace(K) / m
            log.warning("label %d: indefinite curvature, adding %g to the Gram diagonal", sub.label, jitter)
            K = K + jitter * np.eye(m)
            g = K @ expansion(sub, eta, theta)
            continue
        # drop accumulated rounding in the cached gradient before certifying
        g[:] = K @ expansion(sub, eta, theta)
        dual = DualSolution(eta=eta.copy(), theta=theta.copy(),
                            objective=dual_objective(sub, eta, theta), iterations=used, jitter=jitter)
        try:
            primal = recover_primal(sub, dual, config)
        except ConvergenceError:
            primal = None
        if primal is not None:
            report = kkt_report(sub, primal, dual)
            best = (dual, primal, report)
            if report.relative_gap <= config.tolerance:
                return dual
        if status == _smo.STATUS_MAX_ITER or eps < 1e-15:
            raise ConvergenceError(
                f"label {sub.label}: no certified optimum after {used} iterations",
                *(best or (dual, None, None)), label=sub.label)
        eps *= 0.1


def solve(sub: LabelSubproblem, config: SolverConfig = SolverConfig()):
    """Dual solve plus recovery; returns ``(dual, primal, report)``."""
    dual = solve_dual(sub, config)
    primal = recover_primal(sub, dual, config)
    return dual, primal, kkt_report(sub, primal, dual)


def _polish_active_set(sub: LabelSubproblem, w, b1, b2, tau=1e-6):
    """Re-solve the primal exactly on the active set guessed from an interior point.

    Points are split into margin (y f1 = 1), violators (y f1 < 1, multiplier
    C1) and the positives touching the upper hyperplane.  Stationarity plus
    the active equalities form a square linear system; the answer is kept only
    if it is feasible and its multipliers have the right signs.
    """
    X, y = sub.features, sub.signs
    m, n = X.shape
    s = X @ w
    margin_gap = y * (s + b1) - 1.0
    M = np.flatnonzero(np.abs(margin_gap) <= tau)
    V = np.flatnonzero(margin_gap < -tau)
    P = sub.positives
    T = P[np.abs(s[P] + b2) <= tau] if b2 is not None else np.zeros(0, dtype=int)
    nb = 2 if b2 is not None else 1
    size = n + nb + M.size + T.size
    A = np.zeros((size, size))
    rhs = np.zeros(size)
    iM = n + nb
    iT = iM + M.size
    # stationarity in w
    A[:n, :n] = np.eye(n)
    A[:n, iM:iT] = -(y[M][:, None] * X[M]).T
    A[:n, iT:] = X[T].T
    rhs[:n] = sub.C1 * (y[V][:, None] * X[V]).sum(0)
    if b2 is not None:
        rhs[:n] += 2.0 * sub.C2 * X[P].sum(0)
    # stationarity in b1 (and b2)
    A[n, iM:iT] = y[M]
    rhs[n] = -sub.C1 * y[V].sum()
    if b2 is not None:
        A[n + 1, iT:] = 1.0
        rhs[n + 1] = 2.0 * sub.C2 * P.size
    # active rows
    A[iM:iT, :n] = y[M][:, None] * X[M]
    A[iM:iT, n] = y[M]
    rhs[iM:iT] = 1.0
    if b2 is not None:
        A[iT:, :n] = X[T]
        A[iT:, n + 1] = 1.0
    # multipliers can be non-unique on degenerate active sets, so bound them
    lb = np.full(size, -np.inf)
    ub = np.full(size, np.inf)
    lb[iM:] = 0.0
    ub[iM:iT] = sub.C1
    sol = lsq_linear(A, rhs, bounds=(lb, ub), method="bvls", tol=1e-15).x
    if np.linalg.norm(A @ sol - rhs) > 1e-9 * (1.0 + np.linalg.norm(rhs)):
        return None
    w_new = sol[:n]
    s_new = X @ w_new
    f1 = y * (s_new + sol[n])
    ok = np.all(f1[V] <= 1.0 + 1e-9)
    rest = np.setdiff1d(np.arange(m), np.concatenate([M, V]))
    ok = ok and np.all(f1[rest] >= 1.0 - 1e-9)
    if b2 is not None:
        ok = ok and np.all(s_new[P] + sol[n + 1] <= 1e-9)
    return w_new if ok else None


def brute_force_primal(sub: LabelSubproblem, config: SolverConfig = SolverConfig()) -> PrimalSolution:
    """Solve the linear primal directly with an interior-point QP.

    The equality rows are eliminated through ``alpha_i = -2 (w.x_i + b2)``,
    which leaves ``w.x_i + b2 <= 0`` on the positives and a linear cost
    ``-2 C2 sum_P (w.x_i + b2)``.  The returned point carries its own KKT
    certificate built from the QP multipliers.
    """
    from cvxopt import matrix, solvers

    if sub.features is None or not sub.kernel.is_linear:
        raise ValueError("the primal oracle needs raw features and a linear kernel")
    if sub.m > 200:
        raise ValueError("the primal oracle is meant for m <= 200")
    _check_two_classes(sub)
    X = sub.features
    y = sub.signs
    m, n = X.shape
    P_idx = sub.positives
    with_upper = sub.C2 > 0
    nb = 2 if with_upper else 1
    N = n + nb + m
    iw, ib1, ib2, idel = slice(0, n), n, n + 1, slice(n + nb, N)

    Pm = np.zeros((N, N))
    Pm[iw, iw] = np.eye(n)
    q = np.zeros(N)
    q[idel] = sub.C1
    rows = [np.hstack([-y[:, None] * X, -y[:, None], np.zeros((m, nb - 1)), -np.eye(m)]),
            np.hstack([np.zeros((m, n + nb)), -np.eye(m)])]
    h = [-np.ones(m), np.zeros(m)]
    if with_upper:
        q[iw] = -2.0 * sub.C2 * X[P_idx].sum(0)
        q[ib2] = -2.0 * sub.C2 * P_idx.size
        G3 = np.zeros((P_idx.size, N))
        G3[:, iw] = X[P_idx]
        G3[:, ib2] = 1.0
        rows.append(G3)
        h.append(np.zeros(P_idx.size))
    G = np.vstack(rows)
    hv = np.concatenate(h)

    opts = {"show_progress": False, "abstol": 1e-10, "reltol": 1e-11,
            "feastol": 1e-9, "maxiters": max(50, min(config.max_iter, 500))}
    res = solvers.qp(matrix(Pm), matrix(q), matrix(G), matrix(hv), options=opts)
    if res["status"] not in ("optimal", "unknown") or res["x"] is None:
        raise ConvergenceError(f"label {sub.label}: primal QP failed ({res['status']})")
    z = np.array(res["x"]).ravel()
    mult = np.array(res["z"]).ravel()

    w = z[iw].copy()
    polished = _polish_active_set(sub, w, z[ib1], z[ib2] if with_upper else None)
    if polished is not None:
        w = polished
    s = X @ w
    # exact one-dimensional polish of the biases for the recovered w
    lo, hi = hinge_bias_interval(s, y)
    b1 = 0.5 * (lo + hi)
    b2 = upper_bias(sub, s)
    delta, alpha = minimal_slacks(sub, s, b1, b2)
    primal = PrimalSolution(b1=b1, b2=b2, delta=delta, alpha=alpha, objective=0.0, w=w)
    primal.objective = primal_objective(sub, primal)

    eta = np.clip(mult[:m], 0.0, sub.C1)
    theta = np.zeros(m)
    if with_upper:
        theta[P_idx] = np.maximum(0.5 * mult[2 * m:] - sub.C2, -sub.C2)
    dual = DualSolution(eta=eta, theta=theta, objective=dual_objective(sub, eta, theta))
    primal.certificate = kkt_report(sub, primal, dual)
    if res["status"] != "optimal" and primal.certificate.relative_gap > config.tolerance:
        raise ConvergenceError(f"label {sub.label}: primal QP stalled", dual, primal,
                               primal.certificate, sub.label)
    return primal

