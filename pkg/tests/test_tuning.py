import math

import numpy as np
import pytest

from hdgc.lasso import LassoFit, LassoProblem, lambda_grid, lasso_path, solve
from hdgc.montecarlo import Cell, run_cell
from hdgc.tuning import (
    BoundInfeasibleError,
    DegenerateProblemError,
    TuningRule,
    ic_penalty,
    lambda_plugin,
    penalty_lower_bound,
    plugin_lambda_value,
    select_ic,
    select_tscv,
    tscv_fold_errors,
    tune,
)

# Phi^{-1}(1 - 0.05/200) / 10 evaluated with mpmath at 30 digits
PLUGIN_ORACLE = 0.348075640434621277743832947525


def _fit(lam, sse, df, m=60):
    active = np.arange(df)
    return LassoFit(np.zeros(m), np.zeros(m), 0.0, active, lam, 1, True, sse, np.ones(m))


def _sparse_problem(rng, n=100, m=40, signal=1.0):
    X = rng.standard_normal((n, m))
    y = signal * X[:, 0] - 0.7 * signal * X[:, 1] + rng.standard_normal(n)
    return LassoProblem(X, y)


def test_ic_constants():
    assert ic_penalty(TuningRule(kind="aic"), 100, 10) == 2.0
    assert ic_penalty(TuningRule(kind="bic"), 100, 10) == pytest.approx(math.log(100))
    assert ic_penalty(TuningRule(kind="ebic", ebic_gamma=0.5), 100, 10) == pytest.approx(
        math.log(100) + math.log(10))
    with pytest.raises(ValueError):
        ic_penalty(TuningRule(kind="plugin"), 100, 10)


def test_equal_sse_prefers_fewer_variables():
    path = [_fit(1.0, 50.0, 3), _fit(0.5, 50.0, 5)]
    lam, audit = select_ic(path, TuningRule(kind="bic"), 100, 60)
    assert lam == 1.0 and audit.chosen_df == 3


def test_exact_tie_goes_to_larger_lambda():
    path = [_fit(0.3, 50.0, 2), _fit(0.9, 50.0, 2), _fit(0.1, 60.0, 2)]
    assert select_ic(path, TuningRule(kind="aic"), 100, 60)[0] == 0.9


def test_ebic_gamma_zero_is_bic(rng):
    problem = _sparse_problem(rng)
    path = lasso_path(problem, lambda_grid(problem))
    a = select_ic(path, TuningRule(kind="ebic", ebic_gamma=0.0), problem.n, 500)
    b = select_ic(path, TuningRule(kind="bic"), problem.n, 500)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1].criterion, b[1].criterion)


def test_lower_bound_examples():
    slack = [_fit(1.0, 10.0, 0), _fit(0.5, 8.0, 10), _fit(0.1, 7.0, 24)]
    assert penalty_lower_bound(slack, 50, 0.5).all()
    tight = slack + [_fit(0.05, 5.0, 30)]
    assert penalty_lower_bound(tight, 50, 0.5).tolist() == [True, True, True, False]
    # the largest-lambda point survives even over the cap
    assert penalty_lower_bound([_fit(1.0, 1.0, 40), _fit(0.1, 1.0, 45)], 50).tolist() == [True, False]
    with pytest.raises(ValueError):
        penalty_lower_bound(slack, 50, 0.0)


def test_bound_changes_choice_and_flags_it():
    path = [_fit(1.0, 100.0, 0), _fit(0.1, 1e-3, 40)]
    lam, audit = select_ic(path, TuningRule(kind="aic"), 50, 60)
    assert lam == 1.0 and audit.bound_active
    lam, audit = select_ic(path, TuningRule(kind="aic", enforce_bound=False), 50, 60)
    assert lam == 0.1 and not audit.bound_active


def test_bound_infeasible_signal():
    rule = TuningRule(kind="bic")
    with pytest.raises(BoundInfeasibleError):
        select_ic([], rule, 50, 60)


def test_bound_on_off_agree_when_slack(rng):
    for _ in range(10):
        problem = _sparse_problem(rng, n=200, m=20)
        path = lasso_path(problem, lambda_grid(problem))
        assert max(f.df for f in path) <= 100
        for kind in ("aic", "bic", "ebic"):
            on = select_ic(path, TuningRule(kind=kind), problem.n, 20)[0]
            off = select_ic(path, TuningRule(kind=kind, enforce_bound=False), problem.n, 20)[0]
            assert on == off


@pytest.mark.filterwarnings("ignore:lasso did not converge")
def test_ic_ordering_mostly_monotone(rng):
    ok = 0
    for _ in range(100):
        n = int(rng.integers(50, 150))
        problem = _sparse_problem(rng, n=n, m=int(rng.integers(10, 80)), signal=rng.uniform(0, 1))
        path = lasso_path(problem, lambda_grid(problem))
        lams = [select_ic(path, TuningRule(kind=k), n, problem.m)[0] for k in ("aic", "bic", "ebic")]
        ok += lams[0] <= lams[1] <= lams[2]
    assert ok >= 95


def test_plugin_closed_form():
    assert plugin_lambda_value(1.0, 100, 100, 0.05, 0.5) == pytest.approx(PLUGIN_ORACLE, rel=1e-14)
    assert plugin_lambda_value(2.0, 100, 100) == pytest.approx(2 * plugin_lambda_value(1.0, 100, 100))


def test_plugin_iteration_audit(rng):
    problem = _sparse_problem(rng)
    lam, audit, fit = lambda_plugin(problem)
    assert 1 <= len(audit.sigma_hat) <= 16
    assert lam == pytest.approx(plugin_lambda_value(audit.sigma_hat[-1], problem.n, problem.m))
    assert fit.lam == lam and {0, 1} <= set(fit.active_set)
    if len(audit.sigma_hat) < 16:
        prev = plugin_lambda_value(audit.sigma_hat[-2], problem.n, problem.m)
        assert abs(lam - prev) < 0.01 * prev


def test_plugin_relabel_invariant(rng):
    for _ in range(5):
        problem = _sparse_problem(rng)
        perm = rng.permutation(problem.m)
        a, _, fa = lambda_plugin(problem)
        b, _, fb = lambda_plugin(LassoProblem(problem.X_raw[:, perm], problem.y_raw))
        # equal up to the solver tolerance; the sweep order differs
        assert b == pytest.approx(a, rel=1e-6)
        np.testing.assert_allclose(fb.beta, fa.beta[perm], atol=1e-5)


def test_plugin_fewer_than_five_columns(rng):
    X = rng.standard_normal((50, 3))
    lam, audit, _ = lambda_plugin(LassoProblem(X, X @ [1.0, 0, 0] + rng.standard_normal(50)))
    assert lam > 0


def test_plugin_degenerate(rng):
    X = rng.standard_normal((30, 4))
    with pytest.raises(DegenerateProblemError):
        lambda_plugin(LassoProblem(X, X[:, 0] * 2.0))


def test_tscv_no_look_ahead(rng):
    problem = _sparse_problem(rng, n=100, m=10)
    grid = lambda_grid(problem, 20)
    base = tscv_fold_errors(problem, grid, folds=5, min_train_fraction=0.5)
    # fold f only touches rows [0, t_{f+1}); the bounds are 50, 60, 70, 80, 90, 100
    y = problem.y_raw.copy()
    y[70:] += 1e3 * rng.standard_normal(30)
    pert = tscv_fold_errors(LassoProblem(problem.X_raw, y), grid, folds=5, min_train_fraction=0.5)
    np.testing.assert_array_equal(base[:2], pert[:2])
    assert not np.array_equal(base[2:], pert[2:])


def test_tscv_noise_prefers_heavy_penalty(rng):
    upper = 0
    for _ in range(200):
        X = rng.standard_normal((80, 10))
        problem = LassoProblem(X, rng.standard_normal(80))
        grid = lambda_grid(problem, 30)
        lam, _ = select_tscv(problem, grid)
        upper += lam >= np.median(grid)
    assert upper >= 140


def test_tscv_noiseless_linear(rng):
    X = rng.standard_normal((100, 8))
    problem = LassoProblem(X, 3.0 * X[:, 2])
    grid = lambda_grid(problem, 50)
    lam, audit = select_tscv(problem, grid)
    assert lam == grid[-1]
    assert 2 in solve(problem, lam).active_set


def test_tscv_insufficient_rows(rng):
    X = rng.standard_normal((5, 2))
    problem = LassoProblem(X, rng.standard_normal(5))
    with pytest.raises(ValueError):
        select_tscv(problem, lambda_grid(problem, 5), folds=5)


def test_tune_returns_fit_on_grid(rng):
    problem = _sparse_problem(rng)
    for kind in ("aic", "bic", "ebic", "tscv"):
        fit, audit = tune(problem, TuningRule(kind=kind))
        assert audit.chosen_lambda in audit.lambdas and fit.lam == audit.chosen_lambda


def test_adaptive_tune_keeps_unpenalized(rng):
    problem = _sparse_problem(rng)
    w = np.ones(problem.m)
    w[5] = 0.0
    fit, _ = tune(problem.with_weights(w), TuningRule(kind="bic", adaptive=True))
    assert 5 in fit.active_set and fit.weights[5] == 0.0


def test_rule_validation():
    for kw in ({"kind": "cv"}, {"ebic_gamma": -1}, {"plugin_alpha": 1.0}, {"folds": 1},
               {"lower_bound_fraction": 0}):
        with pytest.raises(ValueError):
            TuningRule(**kw)


def test_bound_keeps_wide_aic_feasible():
    # K=100, T=50, AIC: every replication's post-selection OLS is feasible with the bound on
    res = run_cell(Cell(1, 100, 50), [TuningRule(kind="aic")], reps=100, seed=31)[0]
    assert res.infeasible == 0
    res = run_cell(Cell(1, 100, 50), [TuningRule(kind="aic", enforce_bound=False)], reps=5, seed=31)[0]
    assert res.infeasible == 5
