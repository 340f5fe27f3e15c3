"""Stacked per-equation regression designs.

Columns are ordered series-major, lag-minor: for a VAR(p) column
``s * p + (l - 1)`` holds lag ``l`` of series ``s``; for the VHAR design
column ``3 * s + {0, 1, 2}`` holds the day/week/month aggregate of series
``s``. The columns of the Granger-causing series are therefore contiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .varsim import TimeSeriesPanel

__all__ = [
    "DesignMatrix",
    "VharAggregates",
    "build_var_design",
    "build_vhar_design",
    "vhar_aggregates",
    "WEEK",
    "MONTH",
]

WEEK = 5
MONTH = 22
VHAR_TAGS = ("day", "week", "month")


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    target: int
    causes: tuple
    col_meta: tuple  # (series index, lag int or aggregate tag) per column
    gc_cols: np.ndarray
    rest_cols: np.ndarray
    names: tuple
    kind: str
    lags: int

    @property
    def effective_T(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    def column_names(self, cols=None) -> list[str]:
        cols = range(self.m) if cols is None else cols
        out = []
        for c in cols:
            s, tag = self.col_meta[c]
            suffix = f"L{tag}" if isinstance(tag, (int, np.integer)) else tag
            out.append(f"{self.names[s]}.{suffix}")
        return out


@dataclass(frozen=True)
class VharAggregates:
    """Lag-1 day/week/month regressors, each (T - 22) x K, aligned to targets ``t = 22..T-1``."""

    daily: np.ndarray
    weekly: np.ndarray
    monthly: np.ndarray


def _resolve(panel: TimeSeriesPanel, target, cause) -> tuple[int, tuple]:
    i = panel.index(target)
    if isinstance(cause, (str, int, np.integer)):
        cause = [cause]
    ks = tuple(sorted({panel.index(k) for k in cause}))
    if not ks:
        raise ValueError("at least one causing series is required")
    if i in ks:
        raise ValueError("target and cause must differ (self-causality is not tested)")
    return i, ks


def _finish(panel, X, y, i, ks, col_meta, width, kind, lags, center) -> DesignMatrix:
    if center:
        X = X - X.mean(axis=0)
        y = y - y.mean()
    gc_mask = np.zeros(X.shape[1], dtype=bool)
    for k in ks:
        gc_mask[k * width:(k + 1) * width] = True
    X.setflags(write=False)
    y.setflags(write=False)
    return DesignMatrix(
        X=X,
        y=y,
        target=i,
        causes=ks,
        col_meta=tuple(col_meta),
        gc_cols=np.flatnonzero(gc_mask),
        rest_cols=np.flatnonzero(~gc_mask),
        names=panel.names,
        kind=kind,
        lags=lags,
    )


def lag_matrix(data: np.ndarray, p: int) -> np.ndarray:
    """(T - p) x (K p) matrix, series-major, lag-minor."""
    T, K = data.shape
    X = np.empty((T - p, K * p))
    for s in range(K):
        for lag in range(1, p + 1):
            X[:, s * p + lag - 1] = data[p - lag:T - lag, s]
    return X


def build_var_design(
    panel: TimeSeriesPanel, target, cause, p: int = 1, center: bool = True
) -> DesignMatrix:
    """Regress series ``target`` on ``p`` lags of every series.

    ``cause`` may be a single series or a sequence (block test). Rows are
    target times ``t = p, ..., T-1``.
    """
    if p < 1:
        raise ValueError("lag order p must be at least 1")
    if panel.T <= p:
        raise ValueError(f"need T > p, got T={panel.T}, p={p}")
    i, ks = _resolve(panel, target, cause)
    X = lag_matrix(panel.data, p)
    y = panel.data[p:, i].copy()
    meta = [(s, lag) for s in range(panel.K) for lag in range(1, p + 1)]
    return _finish(panel, X, y, i, ks, meta, p, "var", p, center)


def vhar_aggregates(data: np.ndarray) -> VharAggregates:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    T = data.shape[0]
    if T <= MONTH:
        raise ValueError(f"VHAR design needs T > {MONTH}, got {T}")
    windows = np.lib.stride_tricks.sliding_window_view
    # windows end at t-1 so every regressor predates the target at t
    daily = data[MONTH - 1:T - 1]
    weekly = windows(data, WEEK, axis=0)[MONTH - WEEK:T - WEEK].mean(axis=-1)
    monthly = windows(data, MONTH, axis=0)[:T - MONTH].mean(axis=-1)
    return VharAggregates(daily, weekly, monthly)


def build_vhar_design(
    panel: TimeSeriesPanel, target, cause, center: bool = True
) -> DesignMatrix:
    """Day/week/month HAR regressors for every series; the GC block is the 3 columns of ``cause``."""
    i, ks = _resolve(panel, target, cause)
    agg = vhar_aggregates(panel.data)
    K = panel.K
    X = np.empty((panel.T - MONTH, 3 * K))
    X[:, 0::3] = agg.daily
    X[:, 1::3] = agg.weekly
    X[:, 2::3] = agg.monthly
    y = panel.data[MONTH:, i].copy()
    meta = [(s, tag) for s in range(K) for tag in VHAR_TAGS]
    return _finish(panel, X, y, i, ks, meta, 3, "vhar", 3, center)


def build_design(panel: TimeSeriesPanel, target, cause, kind: str = "var", p: int = 1,
                 center: bool = True) -> DesignMatrix:
    if kind == "var":
        return build_var_design(panel, target, cause, p, center=center)
    if kind == "vhar":
        return build_vhar_design(panel, target, cause, center=center)
    raise ValueError(f"unknown design kind {kind!r}")

