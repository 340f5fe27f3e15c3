"""Size/power tables by simulation.

Replication ``r`` of a cell draws its panel with seed ``seed + r``, so a
cell's numbers do not depend on the worker count, and all tuning rules in
a cell are evaluated on the same panels.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .pdslm import GCTestSpec, PostOLSInfeasibleError, bivariate_gc_test, gc_test
from .tuning import BoundInfeasibleError, TuningRule
from .varsim import build_dgp, simulate_var, toeplitz_sigma

__all__ = ["Cell", "CellResult", "run_cell", "run_grid", "table_csv", "table_json"]

# every cell tests series 1 -> series 2 (0-based 0 -> 1)
TARGET, CAUSE = 1, 0


@dataclass(frozen=True)
class Cell:
    dgp: int
    K: int
    T: int
    rho: float = 0.0
    hypothesis: str = "null"
    lags: int = 1


@dataclass
class CellResult:
    cell: Cell
    method: str
    reps: int
    rejections: int
    infeasible: int
    statistic: str

    @property
    def rate(self) -> float | None:
        """Rejection frequency in percent; ``None`` (NA) if any replication was infeasible."""
        if self.infeasible:
            return None
        return 100.0 * self.rejections / self.reps

    def row(self) -> dict:
        d = asdict(self.cell)
        d.update(method=self.method, statistic=self.statistic, reps=self.reps,
                 rejections=self.rejections, infeasible=self.infeasible, rate=self.rate)
        return d


def _one_rep(args) -> list:
    cell, methods, statistic, alpha, burn_in, seed = args
    coeffs = build_dgp(cell.dgp, cell.K, cell.hypothesis)
    panel = simulate_var(coeffs, toeplitz_sigma(cell.K, cell.rho), cell.T, burn_in, seed)
    out = []
    for method in methods:
        try:
            if method == "bivariate":
                res = bivariate_gc_test(panel, TARGET, CAUSE, cell.lags, alpha)
            else:
                spec = GCTestSpec(target=TARGET, cause=CAUSE, lags=cell.lags, tuning=method,
                                  statistic=statistic, alpha=alpha)
                res = gc_test(panel, spec)
            out.append(bool(res.p_value < alpha))
        except (PostOLSInfeasibleError, BoundInfeasibleError):
            out.append(None)
    return out


def _method_name(m) -> str:
    return m if isinstance(m, str) else m.kind


def run_cell(
    cell: Cell,
    methods: Sequence,
    reps: int = 1000,
    seed: int = 0,
    statistic: str = "lm_f",
    alpha: float = 0.05,
    burn_in: int = 50,
    workers: int = 1,
) -> list[CellResult]:
    """Rejection counts for each method on one (DGP, K, T, rho, hypothesis, lags) cell.

    ``methods`` holds :class:`TuningRule` objects (PDS tests with
    ``statistic``) and/or the string ``'bivariate'`` for the two-series F test.
    """
    if reps < 1:
        raise ValueError("replications must be at least 1")
    methods = list(methods)
    jobs = [(cell, methods, statistic, alpha, burn_in, seed + r) for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_one_rep, jobs, chunksize=max(1, reps // (8 * workers))))
    else:
        outcomes = [_one_rep(j) for j in jobs]
    outcomes = np.array(outcomes, dtype=object).reshape(reps, len(methods))
    results = []
    for j, m in enumerate(methods):
        col = outcomes[:, j]
        infeasible = int(sum(v is None for v in col))
        rejections = int(sum(v is True for v in col))
        results.append(CellResult(cell, _method_name(m), reps, rejections, infeasible,
                                  "bivariate_f" if m == "bivariate" else statistic))
    return results


def run_grid(
    dgps: Sequence[int],
    Ks: Sequence[int],
    Ts: Sequence[int],
    rhos: Sequence[float] = (0.0,),
    hypotheses: Sequence[str] = ("null",),
    lags: int = 1,
    methods: Sequence = (TuningRule(kind="bic"),),
    reps: int = 1000,
    seed: int = 0,
    statistic: str = "lm_f",
    alpha: float = 0.05,
    burn_in: int = 50,
    workers: int = 1,
    progress=None,
) -> list[CellResult]:
    """Every cell of the Cartesian grid; cells invalid for a DGP (DGP3 with K not divisible by 5) raise."""
    for v in list(Ks) + list(Ts):
        if v <= 0:
            raise ValueError("grid entries must be positive")
    results = []
    for dgp in dgps:
        for hyp in hypotheses:
            for rho in rhos:
                for K in Ks:
                    build_dgp(dgp, K, hyp)
                    for T in Ts:
                        cell = Cell(dgp, K, T, rho, hyp, lags)
                        res = run_cell(cell, methods, reps, seed, statistic, alpha, burn_in, workers)
                        if progress:
                            progress(res)
                        results.extend(res)
    return results


def _fmt(rate) -> str:
    return "NA" if rate is None else f"{rate:.1f}"


def table_csv(results: Sequence[CellResult]) -> str:
    buf = io.StringIO()
    fields = ["dgp", "hypothesis", "rho", "K", "T", "lags", "method", "statistic", "reps",
              "rejections", "infeasible", "rate"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in results:
        row = r.row()
        row["rate"] = _fmt(r.rate)
        writer.writerow({k: row[k] for k in fields})
    return buf.getvalue()


def table_json(results: Sequence[CellResult]) -> str:
    return json.dumps([r.row() for r in results], indent=2)
