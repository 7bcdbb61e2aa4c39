"""Local-linear estimation with the quartic kernel.

Bandwidth comes from a Fan-Gijbels style rule of thumb on the studentized
covariate, shrunk by ``n**(1/5 - 2/7)`` to undersmooth. Pointwise standard
errors use the usual asymptotic formula with kernel density and
Nadaraya-Watson conditional-variance estimates at the same bandwidth.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import (BoundCurve, EstimatorKind, EvaluationGrid, InfluenceWeights,
                   NumericalError, Sample, Side)

# Constants of the quartic kernel: int K^2 and -int K K'' / int K^2.
# Both are checked against numerical integration in the test suite.
K_SQUARED_INTEGRAL = 5.0 / 7.0
KERNEL_LAMBDA = 3.0
K_ZERO = 15.0 / 16.0
FLOOR = 1e-10
ROT_CONSTANT = 2.036
_CHUNK = 512


def quartic(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) <= 1.0, K_ZERO * (1.0 - s * s) ** 2, 0.0)


def _rot_parts(v, y, weighted_denominator=False):
    """Pieces of the rule-of-thumb formula, exposed for testing."""
    n = v.size
    sv = v.std(ddof=1)
    vt = (v - v.mean()) / sv
    X = np.vander(vt, 5, increasing=True)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    sigma2 = float(np.mean(resid ** 2))
    second = 2 * coef[2] + 6 * coef[3] * vt + 12 * coef[4] * vt ** 2
    q10, q90 = np.quantile(vt, [0.1, 0.9])
    w0 = (vt >= q10) & (vt <= q90)
    # default averages the curvature over all observations (see rot_bandwidth)
    curv = second ** 2 * w0 if weighted_denominator else second ** 2
    denom = float(np.sum(curv) / n)
    return dict(s_v=sv, sigma2=sigma2, w0_integral=float(q90 - q10), denom=denom, n=n)


def rot_bandwidth(sample: Sample, weighted_denominator: bool = False) -> float:
    """Undersmoothed rule-of-thumb bandwidth for local-linear fitting.

    The squared pilot curvature is averaged over all observations; pass
    ``weighted_denominator=True`` to restrict it to the central 80% of the
    studentized covariate instead. Falls back to ``s_v * n**(-2/7)``, with a
    warning, when the quartic pilot has zero residual variance or curvature.
    """
    v, y = sample.v1, sample.y
    if v.size < 6:
        raise NumericalError("rule-of-thumb bandwidth needs at least 6 observations")
    parts = _rot_parts(v, y, weighted_denominator)
    n = parts["n"]
    tiny = 1e-12 * max(float(np.var(y)), 1e-300)  # relative to the outcome scale
    if parts["sigma2"] > tiny and parts["denom"] > tiny:
        ratio = parts["sigma2"] * parts["w0_integral"] / parts["denom"]
    else:
        ratio = 0.0
    h_rot = ROT_CONSTANT * ratio ** 0.2 * n ** -0.2
    if not (np.isfinite(h_rot) and h_rot > 1e-8):
        warnings.warn("rule-of-thumb bandwidth degenerate (zero variance or curvature); "
                      "falling back to s_v * n^(-2/7). Consider passing h explicitly.",
                      RuntimeWarning, stacklevel=2)
        return float(parts["s_v"] * n ** (-2.0 / 7.0))
    return float(h_rot * parts["s_v"] * n ** 0.2 * n ** (-2.0 / 7.0))


def _moments(x, v, h, y_cols):
    """Kernel-weighted sums around each x for local-linear normal equations."""
    out = []
    for start in range(0, x.size, _CHUNK):
        xc = x[start:start + _CHUNK]
        d = v[None, :] - xc[:, None]
        W = quartic(d / h)
        S0 = W.sum(1)
        Wd = W * d
        S1 = Wd.sum(1)
        S2 = (Wd * d).sum(1)
        npos = (W > 0).sum(1)
        T0 = W @ y_cols
        T1 = Wd @ y_cols
        out.append((S0, S1, S2, npos, T0, T1))
    return [np.concatenate(parts) for parts in zip(*out)]


def local_linear_at(x, v, y, h):
    """Intercepts of kernel-weighted linear fits at each point of ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    S0, S1, S2, npos, T0, T1 = _moments(x, v, h, y)
    det = S0 * S2 - S1 ** 2
    bad = (npos < 2) | (det <= 1e-12 * np.maximum(S0 * S2, 1e-300))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NumericalError(
            f"fewer than 2 distinct observations within h={h:.4g} of v={x[i]:.4g}; "
            "use a larger bandwidth or a trimmed grid")
    return (S2 * T0 - S1 * T1) / det


def local_linear_fit(sample: Sample, h: float, grid: EvaluationGrid) -> np.ndarray:
    return local_linear_at(np.asarray(grid.points), sample.v1, sample.y, h)


def kde(x, v, h):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    f = np.concatenate([quartic((x[s:s + _CHUNK, None] - v[None, :]) / h).sum(1)
                        for s in range(0, x.size, _CHUNK)])
    return np.maximum(f / (v.size * h), FLOOR)


def nadaraya_watson(x, v, y, h):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    num, den = [], []
    for s in range(0, x.size, _CHUNK):
        W = quartic((x[s:s + _CHUNK, None] - v[None, :]) / h)
        num.append(W @ y)
        den.append(W.sum(1))
    num, den = np.concatenate(num), np.concatenate(den)
    if np.any(den <= 0):
        i = int(np.flatnonzero(den <= 0)[0])
        raise NumericalError(f"no observations within h={h:.4g} of v={x[i]:.4g}")
    return num / den


@dataclass(frozen=True)
class KernelFit:
    h: float
    theta_hat: np.ndarray  # on the grid
    f_hat: np.ndarray  # on the grid
    sigma2_hat: np.ndarray  # on the grid
    sigma2_at_data: np.ndarray  # at each V_i, used inside the influence weights
    n: int

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"bandwidth must be positive, got {self.h}")


def kde_and_condvar(sample: Sample, h: float, grid: EvaluationGrid, *, with_data=False):
    """Density and conditional variance of y at the grid points.

    The variance is a Nadaraya-Watson smooth of squared local-linear
    residuals. With ``with_data`` the variance at each V_i is also returned.
    """
    v, y = sample.v1, sample.y
    x = np.asarray(grid.points)
    resid2 = (y - local_linear_at(v, v, y, h)) ** 2
    f = kde(x, v, h)
    s2 = np.maximum(nadaraya_watson(x, v, resid2, h), FLOOR)
    if with_data:
        return f, s2, np.maximum(nadaraya_watson(v, v, resid2, h), FLOOR)
    return f, s2


def fit_kernel(sample: Sample, grid: EvaluationGrid, h: float | None = None) -> KernelFit:
    if h is None:
        h = rot_bandwidth(sample)
    theta = local_linear_fit(sample, h, grid)
    f, s2, s2_data = kde_and_condvar(sample, h, grid, with_data=True)
    return KernelFit(float(h), theta, f, s2, s2_data, sample.n)


def kernel_curve(fit: KernelFit, sample: Sample, grid: EvaluationGrid, side: Side = Side.LOWER):
    n, h = fit.n, fit.h
    se = np.sqrt(fit.sigma2_hat * K_SQUARED_INTEGRAL / (n * h * fit.f_hat))
    x = np.asarray(grid.points)
    v = sample.v1
    W = quartic((x[:, None] - v[None, :]) / h)
    w = W * np.sqrt(fit.sigma2_at_data)[None, :] / (np.sqrt(n * h) * fit.f_hat[:, None])
    curve = BoundCurve(grid, fit.theta_hat, se, side, n, EstimatorKind.LOCAL_LINEAR, smoothing=h)
    return curve, InfluenceWeights(w, np.sqrt(n * h))
