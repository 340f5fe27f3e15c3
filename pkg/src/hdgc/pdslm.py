"""Post-double-selection Granger-causality tests.

For target ``i`` and cause ``k`` the lasso first selects controls for
``y_i`` among the non-causing columns, then once more for every lag of the
causing series. The union ``S`` of all selections is used in a low
dimensional LM (or Wald) test of the causing lags.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, stats

from .design import DesignMatrix, build_design
from .lasso import LassoProblem
from .tuning import TuningAudit, TuningRule, tune
from .varsim import TimeSeriesPanel

__all__ = [
    "GCTestSpec",
    "GCTestResult",
    "PostOLSInfeasibleError",
    "pds_lm_test",
    "pds_wald_test",
    "pds_lm_het_robust",
    "gc_test",
    "bivariate_gc_test",
    "chi2_sf",
    "f_sf",
    "STATISTICS",
]

STATISTICS = ("lm_chi2", "lm_f", "wald", "wald_f", "lm_het")
GC_HANDLING = ("exclude_then_reinsert", "keep_unpenalized", "keep_penalized")
SELECTION = ("lasso", "none", "full")


class PostOLSInfeasibleError(RuntimeError):
    """Too many selected variables for the post-selection least squares."""


def chi2_sf(x: float, dof: int) -> float:
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    return float(stats.chi2.sf(max(x, 0.0), dof))


def f_sf(x: float, d1: int, d2: int) -> float:
    if d1 <= 0 or d2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    return float(stats.f.sf(max(x, 0.0), d1, d2))


@dataclass(frozen=True)
class GCTestSpec:
    """What to test and how.

    ``selection='none'`` forces empty selection sets and ``'full'`` selects
    every non-causing column; both bypass the lasso and exist for
    low-dimensional baselines and oracle checks.
    """

    target: object
    cause: object
    lags: int = 1
    design: str = "var"
    tuning: TuningRule = field(default_factory=TuningRule)
    statistic: str = "lm_f"
    alpha: float = 0.05
    gc_handling: str = "exclude_then_reinsert"
    selection: str = "lasso"

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ValueError(f"unknown statistic {self.statistic!r}; expected one of {STATISTICS}")
        if self.gc_handling not in GC_HANDLING:
            raise ValueError(f"unknown gc_handling {self.gc_handling!r}")
        if self.selection not in SELECTION:
            raise ValueError(f"unknown selection mode {self.selection!r}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.lags < 1:
            raise ValueError("lags must be at least 1")


@dataclass
class GCTestResult:
    target: str
    cause: list
    kind: str
    statistic: float
    p_value: float
    dof: object
    S_star: int
    selected: dict
    audit: list
    alpha: float
    t_eff: int
    r_squared: float | None = None

    @property
    def reject(self) -> bool:
        return self.p_value < self.alpha

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "cause": self.cause if len(self.cause) > 1 else self.cause[0],
            "statistic": self.statistic,
            "kind": self.kind,
            "dof": list(self.dof) if isinstance(self.dof, tuple) else self.dof,
            "p_value": self.p_value,
            "S_star": self.S_star,
            "selected": self.selected,
            "reject": self.reject,
            "alpha": self.alpha,
            "t_eff": self.t_eff,
            "r_squared": self.r_squared,
            "tuning": [a.to_dict() for a in self.audit],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


# ---------------------------------------------------------------- least squares

def _independent_columns(X: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Columns of ``order`` kept by an unpivoted QR, earlier columns first."""
    if order.size == 0:
        return order
    R = linalg.qr(X[:, order], mode="r")[0]
    diag = np.zeros(order.size)
    k = min(R.shape)
    diag[:k] = np.abs(np.diag(R)[:k])  # columns beyond the row count are dependent
    scale = np.linalg.norm(X[:, order], axis=0)
    tol = max(X.shape) * np.finfo(float).eps * 10
    return order[diag > tol * np.maximum(scale, 1e-300)]


def _ols_resid(X: np.ndarray, y: np.ndarray):
    if X.shape[1] == 0:
        return y.copy(), np.zeros(0)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return y - X @ coef, coef


# ---------------------------------------------------------------- selection

def _selection(design: DesignMatrix, spec: GCTestSpec):
    """Steps 1-2: the union ``S`` (indices into design columns), per-step sets and audits."""
    rest, gc = design.rest_cols, design.gc_cols
    if spec.selection == "none":
        return np.zeros(0, dtype=int), {}, []
    if spec.selection == "full":
        return rest.copy(), {}, []
    m_total = design.m
    steps: dict = {}
    audits: list[TuningAudit] = []
    problem = LassoProblem(design.X[:, rest], design.y)

    if spec.gc_handling == "exclude_then_reinsert":
        fit, audit = tune(problem, spec.tuning, m_total)
        s0 = rest[fit.active_set]
    else:
        # the first lasso sees every column; only non-causing selections count
        w = np.ones(design.m)
        if spec.gc_handling == "keep_unpenalized":
            w[gc] = 0.0
        full = LassoProblem(design.X, design.y, w)
        fit, audit = tune(full, spec.tuning, m_total)
        s0 = np.intersect1d(fit.active_set, rest)
    steps["y"] = s0
    audits.append(audit)

    for j, col in enumerate(gc):
        fit, audit = tune(problem.with_target(design.X[:, col]), spec.tuning, m_total)
        steps[f"gc{j + 1}"] = rest[fit.active_set]
        audits.append(audit)

    S = np.unique(np.concatenate([s for s in steps.values()] + [np.zeros(0, dtype=int)]))
    return S.astype(int), steps, audits


def _check_feasible(s_star: int, q: int, t_eff: int) -> None:
    if s_star + q >= t_eff:
        raise PostOLSInfeasibleError(
            f"post-selection OLS infeasible: S*={s_star} plus {q} causing lags >= "
            f"T_eff={t_eff}; tighten the penalty bound"
        )


def _prepare(design: DesignMatrix, spec: GCTestSpec):
    S, steps, audits = _selection(design, spec)
    gc = design.gc_cols
    _check_feasible(S.size, gc.size, design.effective_T)
    keep = _independent_columns(design.X, np.concatenate([gc, S]).astype(int))
    dropped = np.setdiff1d(np.concatenate([gc, S]), keep)
    if np.intersect1d(dropped, gc).size:
        raise np.linalg.LinAlgError("Granger-causing columns are collinear with each other")
    if dropped.size:
        warnings.warn(f"dropping {dropped.size} linearly dependent selected column(s)",
                      RuntimeWarning, stacklevel=3)
        S = np.setdiff1d(S, dropped)
    selected = {k: design.column_names(v) for k, v in steps.items()}
    selected["union"] = design.column_names(S)
    return S, selected, audits


def _result(design, spec, kind, stat, p, dof, S, selected, audits, r2=None) -> GCTestResult:
    return GCTestResult(
        target=design.names[design.target],
        cause=[design.names[k] for k in design.causes],
        kind=kind,
        statistic=float(stat),
        p_value=float(min(max(p, 0.0), 1.0)),
        dof=dof,
        S_star=int(S.size),
        selected=selected,
        audit=audits,
        alpha=spec.alpha,
        t_eff=design.effective_T,
        r_squared=None if r2 is None else float(r2),
    )


# ---------------------------------------------------------------- statistics

def _lm(design: DesignMatrix, spec: GCTestSpec, kind: str) -> GCTestResult:
    S, selected, audits = _prepare(design, spec)
    X, y, gc = design.X, design.y, design.gc_cols
    n, q = design.effective_T, gc.size
    xi, _ = _ols_resid(X[:, S], y)
    nu, _ = _ols_resid(X[:, np.concatenate([S, gc])], xi)
    sst = xi @ xi
    r2 = 0.0 if sst <= 0 else min(max(1.0 - (nu @ nu) / sst, 0.0), 1.0)
    if kind == "lm_chi2":
        stat = n * r2
        return _result(design, spec, kind, stat, chi2_sf(stat, q), q, S, selected, audits, r2)
    d2 = n - S.size - q
    stat = (d2 / q) * (r2 / (1.0 - r2)) if r2 < 1.0 else np.inf
    p = 0.0 if np.isinf(stat) else f_sf(stat, q, d2)
    return _result(design, spec, kind, stat, p, (q, d2), S, selected, audits, r2)


def _wald(design: DesignMatrix, spec: GCTestSpec, kind: str) -> GCTestResult:
    S, selected, audits = _prepare(design, spec)
    X, y, gc = design.X, design.y, design.gc_cols
    n, q = design.effective_T, gc.size
    Z = X[:, np.concatenate([gc, S])]
    resid, coef = _ols_resid(Z, y)
    d2 = n - S.size - q
    s2 = resid @ resid / d2
    ZtZ_inv = linalg.inv(Z.T @ Z)
    b = coef[:q]
    V = s2 * ZtZ_inv[:q, :q]
    stat = float(b @ linalg.solve(V, b, assume_a="pos"))
    if kind == "wald":
        return _result(design, spec, kind, stat, chi2_sf(stat, q), q, S, selected, audits)
    stat /= q
    return _result(design, spec, kind, stat, f_sf(stat, q, d2), (q, d2), S, selected, audits)


def _het(design: DesignMatrix, spec: GCTestSpec) -> GCTestResult:
    S, selected, audits = _prepare(design, spec)
    X, y, gc = design.X, design.y, design.gc_cols
    n, q = design.effective_T, gc.size
    XS = X[:, S]
    xi, _ = _ols_resid(XS, y)
    U = np.column_stack([_ols_resid(XS, X[:, c])[0] for c in gc])
    Pi = xi[:, None] * U
    ones = np.ones(n)
    r, _ = _ols_resid(Pi, ones)
    stat = n - r @ r
    stat = max(stat, 0.0)
    return _result(design, spec, "lm_het", stat, chi2_sf(stat, q), q, S, selected, audits)


def _dispatch(design: DesignMatrix, spec: GCTestSpec, kind: str) -> GCTestResult:
    if kind in ("lm_chi2", "lm_f"):
        return _lm(design, spec, kind)
    if kind in ("wald", "wald_f"):
        return _wald(design, spec, kind)
    return _het(design, spec)


def _design_for(panel: TimeSeriesPanel, spec: GCTestSpec) -> DesignMatrix:
    return build_design(panel, spec.target, spec.cause, spec.design, spec.lags)


def gc_test(panel: TimeSeriesPanel, spec: GCTestSpec) -> GCTestResult:
    """Run the test named by ``spec.statistic``."""
    return _dispatch(_design_for(panel, spec), spec, spec.statistic)


def pds_lm_test(panel: TimeSeriesPanel, spec: GCTestSpec) -> GCTestResult:
    """PDS-LM test; ``spec.statistic`` picks the chi-square (``lm_chi2``) or F (``lm_f``) form.

    The LM statistic uses the effective sample ``T_eff = T - p`` (rows of
    the design); the F form has ``(q, T_eff - S* - q)`` degrees of freedom
    with ``q`` the number of causing columns.
    """
    kind = spec.statistic if spec.statistic in ("lm_chi2", "lm_f") else "lm_f"
    return _dispatch(_design_for(panel, spec), spec, kind)


def pds_wald_test(panel: TimeSeriesPanel, spec: GCTestSpec) -> GCTestResult:
    """Wald test of the causing lags in the OLS of ``y_i`` on ``X_{S u GC}``.

    Classical covariance ``s^2 (Z'Z)^{-1}`` with ``s^2 = SSR / (T_eff - S* - q)``.
    ``statistic='wald_f'`` gives ``W / q`` against ``F(q, T_eff - S* - q)``;
    anything else gives ``W`` against chi-square(q).
    """
    kind = "wald_f" if spec.statistic == "wald_f" else "wald"
    return _dispatch(_design_for(panel, spec), spec, kind)


def pds_lm_het_robust(panel: TimeSeriesPanel, spec: GCTestSpec) -> GCTestResult:
    """Heteroskedasticity-robust PDS-LM: ``T_eff - SSR`` from regressing ones on the score products."""
    return _dispatch(_design_for(panel, spec), spec, "lm_het")


def bivariate_gc_test(panel: TimeSeriesPanel, i, k, p: int = 1, alpha: float = 0.05) -> GCTestResult:
    """Classical F test of Granger causality in the VAR(p) of series ``i`` and ``k`` only.

    Regressions include an intercept, so the denominator degrees of freedom
    are ``T_eff - 2p - 1``.
    """
    sub = panel.subset([i, k])
    if sub.T <= 2 * p + 1:
        raise ValueError("bivariate test needs T > 2p + 1")
    design = build_design(sub, 0, 1, "var", p, center=False)
    n = design.effective_T
    const = np.ones((n, 1))
    Xu = np.hstack([const, design.X])
    Xr = np.hstack([const, design.X[:, design.rest_cols]])
    if np.linalg.matrix_rank(Xu) < Xu.shape[1]:
        raise np.linalg.LinAlgError("singular bivariate design")
    ru, _ = _ols_resid(Xu, design.y)
    rr, _ = _ols_resid(Xr, design.y)
    d2 = n - Xu.shape[1]
    stat = ((rr @ rr - ru @ ru) / p) / (ru @ ru / d2)
    spec = GCTestSpec(target=0, cause=1, lags=p, alpha=alpha, selection="full", statistic="wald_f")
    return _result(design, spec, "bivariate_f", stat, f_sf(stat, p, d2), (p, d2),
                   design.rest_cols, {}, [])


def with_statistic(spec: GCTestSpec, statistic: str) -> GCTestSpec:
    return replace(spec, statistic=statistic)
