import warnings

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdgc.lasso import (
    LassoProblem,
    adaptive_weights,
    kkt_violation,
    lambda_grid,
    lambda_max,
    lasso_path,
    objective,
    solve,
)
from hdgc.design import build_var_design
from hdgc.varsim import build_dgp, simulate_var, toeplitz_sigma


def _random_problem(rng, n=30, m=8, weights=None):
    X = rng.standard_normal((n, m)) * rng.uniform(0.5, 3.0, m) + rng.normal(0, 2, m)
    beta = np.where(rng.random(m) < 0.4, rng.normal(0, 1.5, m), 0.0)
    y = X @ beta + rng.standard_normal(n) + 1.0
    return LassoProblem(X, y, weights)


def cvx_objective(problem, lam):
    b = cp.Variable(problem.m)
    expr = cp.sum_squares(problem.y - problem.X @ b) / problem.n
    expr = expr + lam * cp.sum(cp.multiply(problem.weights, cp.abs(b)))
    prob = cp.Problem(cp.Minimize(expr))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return prob.value


def test_matches_convex_solver(rng):
    worst = 0.0
    for _ in range(20):
        problem = _random_problem(rng)
        lam = rng.uniform(0.05, 0.9) * lambda_max(problem)
        fit = solve(problem, lam, tol=1e-10)
        worst = max(worst, abs(objective(problem, fit.beta_std, lam) - cvx_objective(problem, lam)))
    assert worst < 1e-6


def test_zero_penalty_is_ols(rng):
    problem = _random_problem(rng, n=60, m=6)
    fit = solve(problem, 0.0, tol=1e-13)
    A = np.column_stack([np.ones(problem.n), problem.X_raw])
    coef, *_ = np.linalg.lstsq(A, problem.y_raw, rcond=None)
    np.testing.assert_allclose(fit.beta, coef[1:], atol=1e-8)
    assert fit.intercept == pytest.approx(coef[0], abs=1e-8)


def test_above_lambda_max_is_zero(rng):
    problem = _random_problem(rng)
    lmax = lambda_max(problem)
    assert solve(problem, lmax).active_set.size == 0
    assert solve(problem, 3 * lmax).active_set.size == 0
    assert solve(problem, 0.97 * lmax).active_set.size >= 1


def test_intercept_is_mean_when_empty(rng):
    problem = _random_problem(rng)
    fit = solve(problem, 2 * lambda_max(problem))
    np.testing.assert_allclose(fit.predict(problem.X_raw), problem.y_raw.mean())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 1.2))
def test_kkt_on_every_fit(seed, frac):
    problem = _random_problem(np.random.default_rng(seed), n=40, m=12)
    fit = solve(problem, frac * lambda_max(problem), tol=1e-9)
    assert fit.converged
    assert kkt_violation(problem, fit) < 1e-6


def test_kkt_along_path(rng):
    problem = _random_problem(rng, n=50, m=80)
    tol = 1e-7
    for fit in lasso_path(problem, lambda_grid(problem), tol=tol):
        # coefficient tolerance mapped to the gradient scale (unit-variance columns)
        assert kkt_violation(problem, fit) < 10 * tol * 2 * problem.m


def test_objective_not_worse_than_start(rng):
    problem = _random_problem(rng, n=40, m=15)
    lam = 0.2 * lambda_max(problem)
    start = rng.standard_normal(problem.m)
    fit = solve(problem, lam, warm_start=start)
    assert objective(problem, fit.beta_std, lam) <= objective(problem, problem.to_standardized(start), lam)
    assert objective(problem, fit.beta_std, lam) <= objective(problem, np.zeros(problem.m), lam)


def test_warm_start_same_solution(rng):
    problem = _random_problem(rng, n=40, m=15)
    lam = 0.1 * lambda_max(problem)
    cold = solve(problem, lam, tol=1e-11)
    warm = solve(problem, lam, warm_start=solve(problem, 0.3 * lambda_max(problem)).beta, tol=1e-11)
    np.testing.assert_allclose(warm.beta, cold.beta, atol=1e-8)


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_scale_consistency(rng, c):
    problem = _random_problem(rng)
    lam = 0.3 * lambda_max(problem)
    base = solve(problem, lam, tol=1e-12)
    scaled = solve(problem.with_target(c * problem.y_raw), c * lam, tol=1e-12)
    np.testing.assert_allclose(scaled.beta, c * base.beta, rtol=1e-8, atol=1e-10)


def test_unpenalized_columns_orthogonal(rng):
    w = np.ones(8)
    w[[0, 3]] = 0.0
    problem = _random_problem(rng, weights=w)
    lmax = lambda_max(problem)
    for frac in (0.1, 0.5, 2.0):
        fit = solve(problem, frac * lmax, tol=1e-10)
        r = problem.y - problem.X @ fit.beta_std
        np.testing.assert_allclose(problem.X[:, [0, 3]].T @ r / problem.n, 0, atol=1e-8)
    assert set(solve(problem, 2 * lmax).active_set) <= {0, 3}


def test_grid_endpoints_and_spacing(rng):
    problem = _random_problem(rng)
    g = lambda_grid(problem, 2, 0.01)
    np.testing.assert_allclose(g, [lambda_max(problem), 0.01 * lambda_max(problem)])
    g = lambda_grid(problem, 100)
    assert np.all(np.diff(g) < 0)
    np.testing.assert_allclose(np.diff(np.log(g)), np.log(g[1] / g[0]))
    assert g[-1] / g[0] == pytest.approx(1e-4)
    wide = LassoProblem(rng.standard_normal((20, 40)), rng.standard_normal(20))
    assert lambda_grid(wide)[-1] / lambda_grid(wide)[0] == pytest.approx(1e-2)
    for bad in [(1, None), (10, 1.0), (10, 0.0)]:
        with pytest.raises(ValueError):
            lambda_grid(problem, *bad)


def test_degenerate_grid(rng):
    X = rng.standard_normal((20, 1))
    X -= X.mean()
    y = np.ones(20) * 3.0
    assert lambda_grid(LassoProblem(X, y)).tolist() == [0.0]


def test_path_mostly_monotone(rng):
    up = total = 0
    for _ in range(20):
        problem = _random_problem(rng, n=50, m=30)
        dfs = [f.df for f in lasso_path(problem, lambda_grid(problem))]
        up += sum(b >= a for a, b in zip(dfs, dfs[1:]))
        total += len(dfs) - 1
    assert up / total >= 0.9


def test_adaptive_weight_values():
    np.testing.assert_allclose(adaptive_weights(np.ones(4)), 1.0)
    np.testing.assert_allclose(adaptive_weights([0.5, -0.25], gamma=1), [2.0, 4.0])
    np.testing.assert_allclose(adaptive_weights([0.5, 0.0], gamma=2, zero_policy=1e-4), [4.0, 1e8])
    with pytest.raises(ValueError):
        adaptive_weights([1.0], gamma=0)


def test_adaptive_refit_fewer_false_positives():
    # DGP1 equation for series 2: only its own lag (column 1) is relevant
    pilot_fp = adaptive_fp = 0
    for r in range(100):
        panel = simulate_var(build_dgp(1, 20), toeplitz_sigma(20, 0), 100, 50, seed=900 + r)
        d = build_var_design(panel, 1, 0)
        problem = LassoProblem(d.X, d.y)
        lam = 0.1 * lambda_max(problem)
        pilot = solve(problem, lam)
        refit = solve(problem.with_weights(adaptive_weights(pilot)), lam)
        pilot_fp += np.count_nonzero(pilot.active_set != 1)
        adaptive_fp += np.count_nonzero(refit.active_set != 1)
    assert adaptive_fp < pilot_fp


def test_input_validation(rng):
    with pytest.raises(ValueError):
        LassoProblem(np.ones((5, 2)), np.ones(4))
    with pytest.raises(ValueError):
        LassoProblem(np.column_stack([np.ones(5), rng.standard_normal(5)]), np.ones(5))
    X = rng.standard_normal((5, 2))
    with pytest.raises(ValueError):
        LassoProblem(X, np.array([1, 2, np.nan, 4, 5.0]))
    with pytest.raises(ValueError):
        LassoProblem(X, np.ones(5), weights=[1.0, -1.0])
    problem = LassoProblem(X, rng.standard_normal(5))
    with pytest.raises(ValueError):
        solve(problem, -1.0)


def test_nonconvergence_warns(rng):
    problem = _random_problem(rng, n=20, m=15)
    with pytest.warns(RuntimeWarning):
        fit = solve(problem, 1e-6, tol=1e-14, max_iter=2)
    assert not fit.converged
