"""Synthetic VAR(p) panels.

Simulation uses numpy's PCG64 bit generator (``numpy.random.default_rng``),
so a given seed reproduces the same panel on any platform with the same
numpy major version.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import toeplitz

__all__ = [
    "VarCoefficients",
    "InnovationSpec",
    "TimeSeriesPanel",
    "StabilityReport",
    "UnstableVarError",
    "build_dgp",
    "toeplitz_sigma",
    "simulate_var",
    "stability_check",
    "read_panel_csv",
    "write_panel_csv",
]

DGP2_DECAY = 0.4
DGP3_BLOCK = 5
DGP3_VALUE = 0.15


class UnstableVarError(ValueError):
    """Raised when a coefficient set has companion spectral radius >= 1."""


@dataclass(frozen=True)
class VarCoefficients:
    """Lag matrices ``A_1, ..., A_p`` of a VAR(p), each K x K."""

    lag_matrices: tuple

    def __post_init__(self):
        mats = tuple(np.array(a, dtype=float) for a in self.lag_matrices)
        if not mats:
            raise ValueError("at least one lag matrix is required")
        K = mats[0].shape[0]
        for a in mats:
            if a.ndim != 2 or a.shape != (K, K):
                raise ValueError("lag matrices must be square with identical dimension")
            a.setflags(write=False)
        object.__setattr__(self, "lag_matrices", mats)

    @property
    def K(self) -> int:
        return self.lag_matrices[0].shape[0]

    @property
    def p(self) -> int:
        return len(self.lag_matrices)

    def companion(self) -> np.ndarray:
        K, p = self.K, self.p
        comp = np.zeros((K * p, K * p))
        comp[:K, :] = np.hstack(self.lag_matrices)
        if p > 1:
            comp[K:, :-K] = np.eye(K * (p - 1))
        return comp


@dataclass(frozen=True)
class InnovationSpec:
    """Gaussian innovation covariance. ``rho`` is set when built by the Toeplitz rule."""

    sigma: np.ndarray
    rho: float | None = None

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ValueError("sigma must be a square matrix")
        if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
            raise ValueError("sigma must be symmetric")
        if np.linalg.eigvalsh(sigma).min() <= 0:
            raise ValueError("sigma must be positive definite")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)

    @property
    def K(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class TimeSeriesPanel:
    """T x K block of observations with series names."""

    data: np.ndarray
    names: tuple = field(default=())

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise ValueError("panel data must be two-dimensional (T x K)")
        if not np.all(np.isfinite(data)):
            raise ValueError("panel contains missing or non-finite values")
        names = tuple(str(n) for n in self.names) if self.names else tuple(
            f"s{j + 1}" for j in range(data.shape[1])
        )
        if len(names) != data.shape[1]:
            raise ValueError(f"{len(names)} names for {data.shape[1]} series")
        if len(set(names)) != len(names):
            raise ValueError("series names must be unique")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", names)

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def K(self) -> int:
        return self.data.shape[1]

    def index(self, series) -> int:
        """Column index for a series given by name or integer position."""
        if isinstance(series, (int, np.integer)) and not isinstance(series, bool):
            if not 0 <= series < self.K:
                raise KeyError(f"series index {series} out of range for K={self.K}")
            return int(series)
        try:
            return self.names.index(str(series))
        except ValueError:
            raise KeyError(f"unknown series {series!r}") from None

    def subset(self, series: Sequence) -> "TimeSeriesPanel":
        idx = [self.index(s) for s in series]
        return TimeSeriesPanel(self.data[:, idx], tuple(self.names[j] for j in idx))

    def scaled(self, factor: float) -> "TimeSeriesPanel":
        return TimeSeriesPanel(self.data * factor, self.names)


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    spectral_radius: float


def build_dgp(dgp_id: int, K: int, hypothesis: str = "null") -> VarCoefficients:
    """Coefficient matrix of one of the three simulation designs (p = 1).

    DGP1 is diagonal 0.5, DGP2 has entries ``(-1)^|i-j| * 0.4^(|i-j|+1)`` and
    DGP3 is block diagonal with 5 x 5 blocks of 0.15. The tested pair is
    series 1 -> series 2, i.e. matrix entry (2, 1) in 1-based indexing: it is
    0.2 for the DGP1 alternative and zeroed for the DGP2/DGP3 null.
    """
    if hypothesis not in ("null", "alternative"):
        raise ValueError("hypothesis must be 'null' or 'alternative'")
    if K < 2:
        raise ValueError("K must be at least 2")
    if dgp_id == 1:
        A = 0.5 * np.eye(K)
        if hypothesis == "alternative":
            A[1, 0] = 0.2
    elif dgp_id == 2:
        dist = np.abs(np.subtract.outer(np.arange(K), np.arange(K)))
        A = (-1.0) ** dist * DGP2_DECAY ** (dist + 1)
        if hypothesis == "null":
            A[1, 0] = 0.0
    elif dgp_id == 3:
        if K % DGP3_BLOCK:
            raise ValueError(f"DGP3 needs K divisible by {DGP3_BLOCK}, got {K}")
        A = np.kron(np.eye(K // DGP3_BLOCK), np.full((DGP3_BLOCK, DGP3_BLOCK), DGP3_VALUE))
        if hypothesis == "null":
            A[1, 0] = 0.0
    else:
        raise ValueError(f"unknown DGP id {dgp_id}")
    return VarCoefficients((A,))


def toeplitz_sigma(K: int, rho: float) -> InnovationSpec:
    """Covariance with ``sigma[i, j] = rho ** |i - j|``."""
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    if K < 1:
        raise ValueError("K must be positive")
    return InnovationSpec(toeplitz(rho ** np.arange(K)), rho=float(rho))


def stability_check(coeffs: VarCoefficients) -> StabilityReport:
    radius = float(np.max(np.abs(np.linalg.eigvals(coeffs.companion()))))
    return StabilityReport(stable=radius < 1.0, spectral_radius=radius)


def simulate_var(
    coeffs: VarCoefficients,
    innovations: InnovationSpec,
    T: int,
    burn_in: int = 50,
    seed: int | None = None,
    names: Sequence[str] | None = None,
) -> TimeSeriesPanel:
    """Simulate ``T`` observations after discarding ``burn_in`` draws.

    The recursion starts from ``p`` zero pre-sample values. Innovations are
    ``L z`` with ``L`` the Cholesky factor of ``innovations.sigma``.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    if innovations.K != coeffs.K:
        raise ValueError("innovation and coefficient dimensions differ")
    report = stability_check(coeffs)
    if not report.stable:
        raise UnstableVarError(
            f"companion spectral radius {report.spectral_radius:.4f} >= 1"
        )
    K, p = coeffs.K, coeffs.p
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(innovations.sigma)
    n_total = burn_in + T
    eps = rng.standard_normal((n_total, K)) @ chol.T
    y = np.zeros((n_total + p, K))
    A = coeffs.lag_matrices
    for t in range(p, n_total + p):
        acc = eps[t - p].copy()
        for lag in range(1, p + 1):
            acc += A[lag - 1] @ y[t - lag]
        y[t] = acc
    return TimeSeriesPanel(y[p + burn_in:], tuple(names) if names else ())


def write_panel_csv(panel: TimeSeriesPanel, path) -> None:
    """Header row of names, then one row per time point (``repr`` floats round-trip exactly)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(panel.names)
        for row in panel.data:
            writer.writerow([repr(float(v)) for v in row])


def read_panel_csv(path) -> TimeSeriesPanel:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty panel file")
    header, body = rows[0], rows[1:]
    if not body:
        raise ValueError(f"{path}: no observations")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    return TimeSeriesPanel(data, tuple(header))
