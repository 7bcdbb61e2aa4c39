"""Finite-support parametric bound estimation: one cell mean per support point."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import (BoundCurve, DataError, EstimatorKind, EvaluationGrid,
                   InfluenceWeights, Sample, Side)


@dataclass(frozen=True)
class DiscreteFit:
    support_points: np.ndarray
    gamma_hat: np.ndarray
    omega_hat: np.ndarray  # J x J diagonal, asymptotic covariance of sqrt(n)(gamma_hat - gamma)
    cell_counts: np.ndarray
    n: int


def fit_discrete(sample: Sample, support=None) -> DiscreteFit:
    """Cell means and their diagonal covariance.

    ``omega_hat[j, j] = n * s_j^2 / n_j`` with ``s_j^2`` the unbiased cell
    variance, so ``omega_hat / n`` is the covariance of the cell means.
    """
    v = sample.v1
    support = np.unique(v) if support is None else np.asarray(support, dtype=float)
    if np.unique(support).size != support.size:
        raise DataError("support points must be distinct")
    y = sample.y
    J = support.size
    gamma = np.empty(J)
    var = np.empty(J)
    counts = np.empty(J, dtype=int)
    assigned = 0
    for j, vj in enumerate(support):
        cell = y[v == vj]
        counts[j] = cell.size
        assigned += cell.size
        if cell.size == 0:
            raise DataError(f"empty cell at v={vj}")
        if cell.size == 1:
            raise DataError(f"singleton cell at v={vj}: variance undefined")
        gamma[j] = cell.mean()
        var[j] = cell.var(ddof=1)
    if assigned != sample.n:
        raise DataError(f"{sample.n - assigned} observations fall outside the support list")
    n = sample.n
    omega = np.diag(n * var / counts)
    return DiscreteFit(support, gamma, omega, counts, n)


def discrete_curve(fit: DiscreteFit, side: Side = Side.UPPER):
    order = np.argsort(fit.support_points)
    pts = fit.support_points[order]
    J = pts.size
    measure = float(J)  # counting measure on a finite support
    grid = EvaluationGrid(pts, pts[0], pts[-1], measure)
    root = np.sqrt(np.diag(fit.omega_hat))[order]
    # g(v_j) = e_j' Omega^{1/2}; Omega is diagonal so each row has one entry
    g = np.zeros((J, J))
    g[np.arange(J), order] = root
    se = root / np.sqrt(fit.n)
    curve = BoundCurve(grid, fit.gamma_hat[order], se, side, fit.n, EstimatorKind.DISCRETE)
    return curve, InfluenceWeights(g, np.sqrt(fit.n))
