"""
How the tuning rules choose the penalty
=======================================

Fit one lasso path for the s2 equation of a dense VAR and compare the
penalties picked by AIC, BIC, EBIC, the plug-in rule and rolling
cross-validation.
"""

import numpy as np

from hdgc import build_dgp, build_var_design, simulate_var, toeplitz_sigma
from hdgc.lasso import LassoProblem, lambda_grid, lasso_path
from hdgc.tuning import TuningRule, lambda_plugin, select_ic, select_tscv

K, T = 50, 200
panel = simulate_var(build_dgp(2, K), toeplitz_sigma(K, 0.0), T, seed=3)
design = build_var_design(panel, target="s2", cause="s1")
problem = LassoProblem(design.X[:, design.rest_cols], design.y)

grid = lambda_grid(problem)
path = lasso_path(problem, grid)
print("grid from", grid[0].round(4), "down to", grid[-1].round(8))

for kind in ("aic", "bic", "ebic"):
    lam, audit = select_ic(path, TuningRule(kind=kind), problem.n, design.m)
    print(f"{kind:6s} lambda = {lam:.4f}  selected = {audit.chosen_df}")

lam, audit, fit = lambda_plugin(problem)
print(f"plugin lambda = {lam:.4f}  selected = {fit.df}  sigma iterations = "
      f"{np.round(audit.sigma_hat, 3).tolist()}")

lam, audit = select_tscv(problem, grid, path=path)
print(f"tscv   lambda = {lam:.4f}  selected = {audit.chosen_df}")

# with T small the cap on selected variables starts to bind for AIC
small = simulate_var(build_dgp(2, K), toeplitz_sigma(K, 0.0), 60, seed=3)
d = build_var_design(small, "s2", "s1")
p = LassoProblem(d.X[:, d.rest_cols], d.y)
sp = lasso_path(p, lambda_grid(p))
lam, audit = select_ic(sp, TuningRule(kind="aic"), p.n, d.m)
print("T=60 AIC: selected", audit.chosen_df, "cap", p.n // 2, "bound active:", audit.bound_active)
