"""Cubic B-spline series estimation with a robust (sandwich) covariance.

The number of terms comes from leave-one-out cross validation over a small
candidate set, inflated by ``n**(3/35)`` so that the approximation bias is
dominated by sampling error (undersmoothing).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .data import (BoundCurve, DataError, EstimatorKind, EvaluationGrid,
                   InfluenceWeights, NumericalError, Sample, Side)

CV_CANDIDATES = (5, 6, 7, 8, 9)


@dataclass(frozen=True)
class SplineBasisSpec:
    interior_knots: np.ndarray
    boundary: tuple
    degree: int = 3

    def __post_init__(self):
        knots = np.asarray(self.interior_knots, dtype=float)
        lo, hi = self.boundary
        if not hi > lo:
            raise DataError(f"degenerate boundary {self.boundary}")
        if knots.size and (np.any(np.diff(knots) <= 0) or knots[0] <= lo or knots[-1] >= hi):
            raise DataError("interior knots must be strictly increasing and inside the boundary")
        object.__setattr__(self, "interior_knots", knots)

    @property
    def K(self) -> int:
        return self.interior_knots.size + self.degree + 1

    @property
    def knot_vector(self) -> np.ndarray:
        lo, hi = self.boundary
        k = self.degree
        return np.concatenate([[lo] * (k + 1), self.interior_knots, [hi] * (k + 1)])

    @classmethod
    def from_quantiles(cls, v, K: int, degree: int = 3) -> "SplineBasisSpec":
        """Interior knots at equally spaced sample quantiles of ``v``."""
        m = K - degree - 1
        if m < 0:
            raise DataError(f"K={K} is too small for degree {degree}")
        v = np.asarray(v, dtype=float)
        qs = np.arange(1, m + 1) / (m + 1)
        knots = np.quantile(v, qs) if m else np.empty(0)
        return cls(knots, (float(v.min()), float(v.max())), degree)


def bspline_basis(v, spec: SplineBasisSpec) -> np.ndarray:
    """Basis matrix, one row per evaluation point (a K-vector for scalar ``v``)."""
    x = np.atleast_1d(np.asarray(v, dtype=float))
    lo, hi = spec.boundary
    if np.any(x < lo) or np.any(x > hi):
        raise DataError(f"evaluation point outside boundary knots [{lo}, {hi}]")
    B = BSpline.design_matrix(x, spec.knot_vector, spec.degree).toarray()
    return B[0] if np.ndim(v) == 0 else B


def _design(sample: Sample, K: int):
    v = sample.v1
    spec = SplineBasisSpec.from_quantiles(v, K)
    return spec, bspline_basis(v, spec)


def loo_cv_score(P: np.ndarray, y: np.ndarray) -> float:
    """Leave-one-out least-squares CV via the hat-matrix shortcut."""
    Q, R = np.linalg.qr(P)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * diag.max():
        return math.inf
    resid = y - Q @ (Q.T @ y)
    h = np.einsum("ij,ij->i", Q, Q)
    if np.any(h >= 1 - 1e-10):
        return math.inf
    return float(np.mean((resid / (1 - h)) ** 2))


def undersmooth_K(K_cv: int, n: int) -> int:
    # n^{-1/5} * n^{2/7} = n^{3/35}; tiny slack guards exact-integer products
    return int(math.floor(K_cv * n ** (3.0 / 35.0) + 1e-9))


def select_K(sample: Sample, candidates=CV_CANDIDATES, return_cv: bool = False):
    """Cross-validated K, then undersmoothed. Ties go to the smaller K."""
    if sample.n <= max(candidates):
        raise DataError(f"need n > {max(candidates)} for K selection, got n={sample.n}")
    best, best_score = None, math.inf
    for K in sorted(candidates):
        try:
            _, P = _design(sample, K)
        except DataError:
            continue
        score = loo_cv_score(P, sample.y)
        if np.isfinite(score) and score < best_score:
            best, best_score = K, score
    if best is None:
        raise NumericalError("every K candidate gave a rank-deficient design")
    K = undersmooth_K(best, sample.n)
    return (K, best) if return_cv else K


@dataclass(frozen=True)
class SeriesFit:
    basis: SplineBasisSpec
    beta_hat: np.ndarray
    omega_hat: np.ndarray
    residuals: np.ndarray
    n: int


def fit_series(sample: Sample, K: int, hc: str = "HC0") -> SeriesFit:
    spec, P = _design(sample, K)
    y = sample.y
    n = sample.n
    Q, R = np.linalg.qr(P)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * max(diag.max(), 1e-300):
        raise NumericalError(f"rank-deficient spline design at K={K}")
    beta = np.linalg.solve(R, Q.T @ y)
    resid = y - P @ beta
    e2 = resid ** 2
    if hc == "HC1":
        e2 = e2 * n / (n - K)
    elif hc != "HC0":
        raise ValueError(f"unknown HC variant {hc!r}")
    bread = np.linalg.inv(R.T @ R)  # (P'P)^{-1}
    meat = (P * e2[:, None]).T @ P
    omega = n * bread @ meat @ bread
    omega = (omega + omega.T) / 2
    return SeriesFit(spec, beta, omega, resid, n)


def psd_sqrt(omega: np.ndarray, clip: float = 1e-12, neg_tol: float = 1e-8) -> np.ndarray:
    """Symmetric PSD square root; tiny eigenvalues are clipped to zero."""
    w, U = np.linalg.eigh(omega)
    tr = float(np.trace(omega))
    if w.min() < -neg_tol * max(tr, 1e-300) and tr > 0:
        raise NumericalError(f"matrix is not PSD (min eigenvalue {w.min():.3g})")
    top = max(w.max(), 0.0)
    w = np.where(w > clip * top, w, 0.0)
    return (U * np.sqrt(w)) @ U.T


def series_curve(fit: SeriesFit, grid: EvaluationGrid, side: Side = Side.LOWER):
    P = bspline_basis(np.asarray(grid.points), fit.basis)
    theta = P @ fit.beta_hat
    g = P @ psd_sqrt(fit.omega_hat)
    se = np.linalg.norm(g, axis=1) / np.sqrt(fit.n)
    curve = BoundCurve(grid, theta, se, side, fit.n, EstimatorKind.SERIES,
                       smoothing=float(fit.basis.K))
    return curve, InfluenceWeights(g, np.sqrt(fit.n))
