"""Weighted lasso by cyclic coordinate descent.

Objective (the only lambda convention used in this package)::

    (1/n) * ||y - X b||^2 + lam * sum_j w_j |b_j|

``X`` is centered and scaled to unit (population) standard deviation
internally and coefficients are mapped back to the original scale, which
makes the penalty loadings comparable across columns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numba
import numpy as np

__all__ = [
    "LassoProblem",
    "LassoFit",
    "solve",
    "lasso_path",
    "lambda_max",
    "lambda_grid",
    "adaptive_weights",
    "objective",
    "kkt_violation",
]

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 100_000


@numba.njit(cache=True)
def _cd_gram(gram, xty, weights, lam, beta, tol, max_iter):
    """Covariance-update coordinate descent, in place on ``beta``.

    ``gram = X'X/n`` and ``xty = X'y/n`` for standardized ``X``; the
    gradient ``xty - gram @ beta`` is maintained incrementally.
    """
    m = beta.shape[0]
    grad = xty - gram @ beta
    sweeps = 0
    converged = False
    while sweeps < max_iter:
        sweeps += 1
        max_delta = 0.0
        for j in range(m):
            gjj = gram[j, j]
            if gjj <= 0.0:
                continue
            old = beta[j]
            z = grad[j] + gjj * old
            thr = 0.5 * lam * weights[j]
            if z > thr:
                new = (z - thr) / gjj
            elif z < -thr:
                new = (z + thr) / gjj
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                beta[j] = new
                for k in range(m):
                    grad[k] -= gram[k, j] * delta
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta < tol:
            converged = True
            break
    return sweeps, converged


class LassoProblem:
    """A standardized weighted-lasso problem.

    Parameters
    ----------
    X : (n, m) array
        Raw regressors. Centered and scaled internally.
    y : (n,) array
        Raw response. Centered internally.
    weights : (m,) array, optional
        Nonnegative penalty weights; 0 leaves a column unpenalized.
        Defaults to all ones.
    """

    def __init__(self, X, y, weights=None, _scaling=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be (n, m) and y must be (n,)")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("NaN or infinite values in lasso inputs")
        self.X_raw = X
        self.y_raw = y
        n, m = X.shape
        if _scaling is None:
            x_mean = X.mean(axis=0)
            Xc = X - x_mean
            x_scale = np.sqrt((Xc ** 2).mean(axis=0))
            bad = x_scale <= 1e-12 * (1.0 + np.abs(x_mean))
            if np.any(bad):
                raise ValueError(f"columns with zero sample variance: {np.flatnonzero(bad).tolist()}")
            self.x_mean, self.x_scale = x_mean, x_scale
            self.X = Xc / x_scale
            self.gram = self.X.T @ self.X / n
        else:
            self.x_mean, self.x_scale, self.X, self.gram = _scaling
        self.y_mean = float(y.mean())
        self.y = y - self.y_mean
        self.xty = self.X.T @ self.y / n
        if weights is None:
            weights = np.ones(m)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (m,) or np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be a finite nonnegative vector of length m")
        self.weights = weights

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    def with_target(self, y) -> "LassoProblem":
        """Same regressors (and cached Gram matrix), new response."""
        return LassoProblem(self.X_raw, y, self.weights,
                            _scaling=(self.x_mean, self.x_scale, self.X, self.gram))

    def with_weights(self, weights) -> "LassoProblem":
        return LassoProblem(self.X_raw, self.y_raw, weights,
                            _scaling=(self.x_mean, self.x_scale, self.X, self.gram))

    def to_standardized(self, beta) -> np.ndarray:
        return np.asarray(beta, dtype=float) * self.x_scale

    def from_standardized(self, beta_std) -> np.ndarray:
        return beta_std / self.x_scale


@dataclass(frozen=True)
class LassoFit:
    beta: np.ndarray
    beta_std: np.ndarray
    intercept: float
    active_set: np.ndarray
    lam: float
    iterations: int
    converged: bool
    sse: float
    weights: np.ndarray

    @property
    def df(self) -> int:
        return int(self.active_set.size)

    def predict(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X, dtype=float) @ self.beta


def objective(problem: LassoProblem, beta_std, lam: float = 0.0) -> float:
    """Penalized objective on the standardized scale."""
    r = problem.y - problem.X @ beta_std
    return float(r @ r / problem.n + lam * np.sum(problem.weights * np.abs(beta_std)))


def _make_fit(problem, beta_std, lam, sweeps, converged) -> LassoFit:
    beta_std = beta_std.copy()
    r = problem.y - problem.X @ beta_std
    beta = problem.from_standardized(beta_std)
    return LassoFit(
        beta=beta,
        beta_std=beta_std,
        intercept=problem.y_mean - float(problem.x_mean @ beta),
        active_set=np.flatnonzero(beta_std != 0.0),
        lam=float(lam),
        iterations=int(sweeps),
        converged=bool(converged),
        sse=float(r @ r),
        weights=problem.weights,
    )


def solve(
    problem: LassoProblem,
    lam: float,
    warm_start=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> LassoFit:
    """Minimize the weighted-lasso objective at one penalty level.

    Convergence means the largest coefficient change over a full sweep
    (standardized scale) fell below ``tol``. A fit that hits ``max_iter`` is
    returned with ``converged=False`` and a ``RuntimeWarning``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if lam < 0 or not np.isfinite(lam):
        raise ValueError("lambda must be a finite nonnegative number")
    beta = np.zeros(problem.m) if warm_start is None else problem.to_standardized(warm_start).copy()
    sweeps, converged = _cd_gram(problem.gram, problem.xty, problem.weights, float(lam), beta,
                                 float(tol), int(max_iter))
    if not converged:
        warnings.warn(f"lasso did not converge in {max_iter} sweeps at lambda={lam:.3g}",
                      RuntimeWarning, stacklevel=2)
    return _make_fit(problem, beta, lam, sweeps, converged)


def lasso_path(problem: LassoProblem, lambdas, tol: float = DEFAULT_TOL,
               max_iter: int = DEFAULT_MAX_ITER) -> list[LassoFit]:
    """Fits along ``lambdas`` (in the given order), each warm-started from the previous one."""
    beta = np.zeros(problem.m)
    fits = []
    for lam in lambdas:
        sweeps, converged = _cd_gram(problem.gram, problem.xty, problem.weights, float(lam),
                                     beta, float(tol), int(max_iter))
        if not converged:
            warnings.warn(f"lasso did not converge at lambda={lam:.3g}", RuntimeWarning, stacklevel=2)
        fits.append(_make_fit(problem, beta, lam, sweeps, converged))
    return fits


def _unpenalized_residual(problem: LassoProblem) -> np.ndarray:
    free = problem.weights == 0
    if not np.any(free):
        return problem.y
    Xf = problem.X[:, free]
    coef, *_ = np.linalg.lstsq(Xf, problem.y, rcond=None)
    return problem.y - Xf @ coef


def lambda_max(problem: LassoProblem) -> float:
    """Smallest lambda at which every penalized coefficient is zero.

    ``max_j |(2/n) x_j' r| / w_j`` over penalized columns, where ``r`` is
    ``y`` after projecting out the unpenalized columns (plain ``y`` when all
    columns are penalized). Padded by a relative 1e-10 so the fit at
    ``lambda_max`` is exactly empty despite rounding.
    """
    pen = problem.weights > 0
    if not np.any(pen):
        raise ValueError("lambda_max is undefined when no column is penalized")
    r = _unpenalized_residual(problem)
    score = 2.0 * np.abs(problem.X[:, pen].T @ r) / problem.n
    return float(np.max(score / problem.weights[pen])) * (1.0 + 1e-10)


def lambda_grid(problem: LassoProblem, n_lambda: int = 100, ratio: float | None = None) -> np.ndarray:
    """Log-spaced, strictly decreasing grid from ``lambda_max`` to ``ratio * lambda_max``.

    ``ratio`` defaults to 1e-4 when ``n > m`` and 1e-2 otherwise. A problem
    whose ``lambda_max`` is zero (response orthogonal to every penalized
    column) gets the single-point grid ``[0.0]``.
    """
    if n_lambda < 2:
        raise ValueError("n_lambda must be at least 2")
    if ratio is None:
        ratio = 1e-4 if problem.n > problem.m else 1e-2
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    lmax = lambda_max(problem)
    if lmax <= 0:
        return np.zeros(1)
    return np.geomspace(lmax, ratio * lmax, n_lambda)


def adaptive_weights(initial, gamma: float = 1.0, zero_policy: float = 1e-4) -> np.ndarray:
    """Adaptive-lasso weights ``1 / |b_j|^gamma`` from a pilot fit.

    ``initial`` is a :class:`LassoFit` (its standardized coefficients are
    used) or a coefficient array. Zero pilot coefficients get
    ``1 / zero_policy^gamma``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    b = np.abs(initial.beta_std if isinstance(initial, LassoFit) else np.asarray(initial, float))
    b = np.where(b > 0, b, zero_policy)
    return 1.0 / b ** gamma


def kkt_violation(problem: LassoProblem, fit: LassoFit) -> float:
    """Largest violation of the lasso optimality conditions (standardized scale)."""
    grad = 2.0 * problem.X.T @ (problem.y - problem.X @ fit.beta_std) / problem.n
    bound = fit.lam * problem.weights
    active = fit.beta_std != 0
    viol = np.where(
        active,
        np.abs(grad - bound * np.sign(fit.beta_std)),
        np.maximum(np.abs(grad) - bound, 0.0),
    )
    return float(np.max(viol)) if viol.size else 0.0
