"""Penalty selection: AIC/BIC/EBIC, the Gaussian plug-in rule and rolling
time-series cross-validation, with a cap on the number of selected
variables (a lower bound on lambda)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from .lasso import (
    LassoFit,
    LassoProblem,
    adaptive_weights,
    lambda_grid,
    lasso_path,
    solve,
)

__all__ = [
    "TuningRule",
    "TuningAudit",
    "BoundInfeasibleError",
    "DegenerateProblemError",
    "ic_penalty",
    "select_ic",
    "penalty_lower_bound",
    "lambda_plugin",
    "plugin_lambda_value",
    "select_tscv",
    "tscv_fold_errors",
    "tune",
    "RULE_KINDS",
]

RULE_KINDS = ("aic", "bic", "ebic", "plugin", "tscv")


class BoundInfeasibleError(RuntimeError):
    """No grid point satisfies the cap on selected variables."""


class DegenerateProblemError(RuntimeError):
    """The residual scale collapsed to zero (perfect in-sample fit)."""


@dataclass(frozen=True)
class TuningRule:
    kind: str = "bic"
    ebic_gamma: float = 0.5
    plugin_alpha: float = 0.05
    plugin_c: float = 0.5
    plugin_max_updates: int = 15
    folds: int = 5
    min_train_fraction: float = 0.5
    lower_bound_fraction: float = 0.5
    enforce_bound: bool = True
    n_lambda: int = 100
    lambda_ratio: float | None = None
    adaptive: bool = False
    adaptive_gamma: float = 1.0
    adaptive_zero: float = 1e-4

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown tuning rule {self.kind!r}; expected one of {RULE_KINDS}")
        if self.ebic_gamma < 0:
            raise ValueError("EBIC gamma must be nonnegative")
        if not 0 < self.plugin_alpha < 1:
            raise ValueError("plug-in alpha must lie in (0, 1)")
        if self.folds < 2:
            raise ValueError("TSCV needs at least 2 folds")
        if not 0 < self.lower_bound_fraction <= 1:
            raise ValueError("lower_bound_fraction must lie in (0, 1]")

    def with_kind(self, kind: str) -> "TuningRule":
        return replace(self, kind=kind)


@dataclass
class TuningAudit:
    kind: str
    chosen_lambda: float
    lambdas: np.ndarray | None = None
    criterion: np.ndarray | None = None
    selected_count: np.ndarray | None = None
    admissible: np.ndarray | None = None
    bound_active: bool = False
    sigma_hat: list = field(default_factory=list)
    chosen_df: int | None = None

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "kind": self.kind,
            "chosen_lambda": self.chosen_lambda,
            "chosen_df": self.chosen_df,
            "bound_active": self.bound_active,
            "lambdas": arr(self.lambdas),
            "criterion": arr(self.criterion),
            "selected_count": arr(self.selected_count),
            "sigma_hat": list(self.sigma_hat),
        }


def ic_penalty(rule: TuningRule, n: int, m_total: int) -> float:
    """The per-degree-of-freedom constant ``C_T``."""
    if rule.kind == "aic":
        return 2.0
    if rule.kind == "bic":
        return math.log(n)
    if rule.kind == "ebic":
        return math.log(n) + 2.0 * rule.ebic_gamma * math.log(m_total)
    raise ValueError(f"{rule.kind!r} is not an information criterion")


def penalty_lower_bound(path: list[LassoFit], n: int, fraction: float = 0.5) -> np.ndarray:
    """Boolean mask of grid points selecting at most ``floor(fraction * n)`` variables.

    The first (largest-lambda) point is always kept.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    cap = math.floor(fraction * n)
    mask = np.array([fit.df <= cap for fit in path], dtype=bool)
    if mask.size:
        mask[int(np.argmax([fit.lam for fit in path]))] = True
    return mask


def _admissible(path, n, rule) -> np.ndarray:
    if rule.enforce_bound:
        return penalty_lower_bound(path, n, rule.lower_bound_fraction)
    return np.ones(len(path), dtype=bool)


def _argmin_prefer_large_lambda(values: np.ndarray, lambdas: np.ndarray, mask: np.ndarray) -> int:
    if not np.any(mask):
        raise BoundInfeasibleError(
            "every grid point selects more variables than the cap allows; raise the penalty bound"
        )
    idx = np.flatnonzero(mask)
    v = values[idx]
    best = np.flatnonzero(v == v.min())
    return int(idx[best[np.argmax(lambdas[idx[best]])]])


def select_ic(path: list[LassoFit], rule: TuningRule, n: int, m_total: int) -> tuple[float, TuningAudit]:
    """Minimize ``ln(SSE/n) + C_T * df / n`` over the path.

    Ties go to the larger lambda. Grid points over the cap are skipped when
    ``rule.enforce_bound`` is set.
    """
    if not path:
        raise BoundInfeasibleError("empty lasso path")
    c_t = ic_penalty(rule, n, m_total)
    sse = np.array([f.sse for f in path])
    df = np.array([f.df for f in path])
    lambdas = np.array([f.lam for f in path])
    with np.errstate(divide="ignore"):
        crit = np.log(sse / n) + c_t * df / n
    mask = _admissible(path, n, rule)
    best = _argmin_prefer_large_lambda(crit, lambdas, mask)
    unbounded = _argmin_prefer_large_lambda(crit, lambdas, np.ones_like(mask))
    audit = TuningAudit(
        kind=rule.kind,
        chosen_lambda=float(lambdas[best]),
        lambdas=lambdas,
        criterion=crit,
        selected_count=df,
        admissible=mask,
        bound_active=bool(best != unbounded),
        chosen_df=int(df[best]),
    )
    return float(lambdas[best]), audit


def plugin_lambda_value(sigma: float, n: int, m: int, alpha: float = 0.05, c: float = 0.5) -> float:
    """``2 c sigma n^(-1/2) Phi^{-1}(1 - alpha / (2 m))``."""
    return 2.0 * c * sigma / math.sqrt(n) * norm.ppf(1.0 - alpha / (2.0 * m))


def _initial_sigma(problem: LassoProblem, n_top: int = 5) -> float:
    corr = np.abs(problem.X.T @ problem.y)
    # stable sort keeps the result independent of column relabeling up to exact ties
    top = np.argsort(-corr, kind="stable")[: min(n_top, problem.m)]
    Xs = problem.X[:, top]
    coef, *_ = np.linalg.lstsq(Xs, problem.y, rcond=None)
    r = problem.y - Xs @ coef
    return math.sqrt(r @ r / problem.n)


def lambda_plugin(
    problem: LassoProblem,
    alpha: float = 0.05,
    c: float = 0.5,
    max_updates: int = 15,
) -> tuple[float, TuningAudit, LassoFit]:
    """Gaussian plug-in penalty with iterated residual scale.

    Starts from the OLS residual scale on the five regressors most
    correlated with the response, then alternates lasso fit / scale update
    until lambda moves by less than 1% or ``max_updates`` is reached.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    n, m = problem.n, int(np.count_nonzero(problem.weights > 0)) or problem.m
    sigma = _initial_sigma(problem)
    sigmas = [sigma]
    if sigma <= 1e-12 * (1.0 + math.sqrt(problem.y @ problem.y / n)):
        raise DegenerateProblemError("initial residual scale is zero")
    lam = plugin_lambda_value(sigma, n, m, alpha, c)
    fit = solve(problem, lam)
    for _ in range(max_updates):
        sigma = math.sqrt(fit.sse / n)
        sigmas.append(sigma)
        if sigma <= 1e-12 * (1.0 + math.sqrt(problem.y @ problem.y / n)):
            raise DegenerateProblemError("residual scale collapsed to zero")
        new_lam = plugin_lambda_value(sigma, n, m, alpha, c)
        fit = solve(problem, new_lam, warm_start=fit.beta)
        done = abs(new_lam - lam) < 0.01 * lam
        lam = new_lam
        if done:
            break
    audit = TuningAudit(kind="plugin", chosen_lambda=float(lam), sigma_hat=sigmas,
                        chosen_df=fit.df)
    return float(lam), audit, fit


def _fold_bounds(n: int, folds: int, min_train_fraction: float) -> np.ndarray:
    start = int(math.floor(min_train_fraction * n))
    bounds = np.linspace(start, n, folds + 1).round().astype(int)
    if start < 3 or np.any(np.diff(bounds) < 1):
        raise ValueError(f"insufficient rows ({n}) for {folds} folds with training fraction "
                         f"{min_train_fraction}")
    return bounds


def tscv_fold_errors(problem: LassoProblem, grid, folds: int = 5,
                     min_train_fraction: float = 0.5) -> np.ndarray:
    """Out-of-sample SSE per (fold, lambda) under an expanding origin.

    Fold ``f`` fits on rows ``[0, t_f)`` and scores one-step predictions on
    ``[t_f, t_{f+1})``; nothing after ``t_{f+1}`` is touched.
    """
    grid = np.asarray(grid, dtype=float)
    bounds = _fold_bounds(problem.n, folds, min_train_fraction)
    errors = np.empty((folds, grid.size))
    for f in range(folds):
        lo, hi = bounds[f], bounds[f + 1]
        train = LassoProblem(problem.X_raw[:lo], problem.y_raw[:lo], problem.weights)
        path = lasso_path(train, grid)
        Xt, yt = problem.X_raw[lo:hi], problem.y_raw[lo:hi]
        for g, fit in enumerate(path):
            r = yt - fit.predict(Xt)
            errors[f, g] = r @ r
    return errors


def select_tscv(
    problem: LassoProblem,
    grid,
    folds: int = 5,
    min_train_fraction: float = 0.5,
    rule: TuningRule | None = None,
    path: list[LassoFit] | None = None,
) -> tuple[float, TuningAudit]:
    """Lambda minimizing total rolling-origin prediction error.

    The cap on selected variables is judged on the full-sample ``path``
    (computed when not given) because that is the fit used downstream.
    """
    rule = rule or TuningRule(kind="tscv", folds=folds, min_train_fraction=min_train_fraction)
    grid = np.asarray(grid, dtype=float)
    errors = tscv_fold_errors(problem, grid, folds, min_train_fraction)
    total = errors.sum(axis=0)
    if path is None:
        path = lasso_path(problem, grid)
    mask = _admissible(path, problem.n, rule)
    best = _argmin_prefer_large_lambda(total, grid, mask)
    unbounded = _argmin_prefer_large_lambda(total, grid, np.ones_like(mask))
    audit = TuningAudit(
        kind="tscv",
        chosen_lambda=float(grid[best]),
        lambdas=grid,
        criterion=total,
        selected_count=np.array([f.df for f in path]),
        admissible=mask,
        bound_active=bool(best != unbounded),
        chosen_df=path[best].df,
    )
    return float(grid[best]), audit


def _tune_plain(problem: LassoProblem, rule: TuningRule, m_total: int) -> tuple[LassoFit, TuningAudit]:
    if rule.kind == "plugin":
        _, audit, fit = lambda_plugin(problem, rule.plugin_alpha, rule.plugin_c,
                                      rule.plugin_max_updates)
        return fit, audit
    grid = lambda_grid(problem, rule.n_lambda, rule.lambda_ratio)
    path = lasso_path(problem, grid)
    if rule.kind == "tscv":
        lam, audit = select_tscv(problem, grid, rule.folds, rule.min_train_fraction, rule, path)
    else:
        lam, audit = select_ic(path, rule, problem.n, m_total)
    return path[int(np.flatnonzero(grid == lam)[0])], audit


def tune(problem: LassoProblem, rule: TuningRule, m_total: int | None = None) -> tuple[LassoFit, TuningAudit]:
    """Fit the lasso at the penalty chosen by ``rule``.

    With ``rule.adaptive`` the plain-lasso fit at the same rule is the pilot
    for adaptive weights and the rule is applied again to the reweighted
    problem. Unpenalized columns keep weight zero.
    """
    m_total = problem.m if m_total is None else m_total
    fit, audit = _tune_plain(problem, rule, m_total)
    if not rule.adaptive:
        return fit, audit
    w = adaptive_weights(fit, rule.adaptive_gamma, rule.adaptive_zero)
    w = np.where(problem.weights > 0, w * problem.weights, 0.0)
    return _tune_plain(problem.with_weights(w), rule, m_total)
