"""High-dimensional Granger causality by post-double-selection LM tests."""

__version__ = "0.1.0"

from .design import DesignMatrix, build_var_design, build_vhar_design, vhar_aggregates
from .lasso import LassoFit, LassoProblem, adaptive_weights, lambda_grid, lambda_max, lasso_path, solve
from .network import (
    CommunityPartition,
    SpilloverNetwork,
    edge_betweenness,
    girvan_newman,
    medrv,
    medrv_days,
    spillover_network,
)
from .pdslm import (
    GCTestResult,
    GCTestSpec,
    PostOLSInfeasibleError,
    bivariate_gc_test,
    chi2_sf,
    f_sf,
    gc_test,
    pds_lm_het_robust,
    pds_lm_test,
    pds_wald_test,
)
from .tuning import TuningAudit, TuningRule, lambda_plugin, select_ic, select_tscv, tune
from .varsim import (
    InnovationSpec,
    TimeSeriesPanel,
    VarCoefficients,
    build_dgp,
    read_panel_csv,
    simulate_var,
    stability_check,
    toeplitz_sigma,
    write_panel_csv,
)
