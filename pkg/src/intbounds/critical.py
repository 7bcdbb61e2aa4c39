"""Critical values k(p) for the supremum of the studentized process.

The default route simulates ``max_v alpha(v)'Z`` with ``alpha = g/||g||``.
Analytic alternatives: the exponential majorant for series estimators and
three Gumbel-type forms for kernel estimators.

Draws are made in fixed-size blocks, each from its own Philox stream keyed
by ``(seed, block)``, so the result depends only on the seed and R. Draws
come in antithetic pairs, which makes k for ``g`` and ``-g`` identical.
"""
from __future__ import annotations

import math
import warnings
from typing import Iterable

import numpy as np
from scipy import optimize, stats

from .data import (ArgminSet, CVMethod, CriticalValue, InfluenceWeights,
                   NumericalError)
from .kernel import KERNEL_LAMBDA

DEFAULT_R = 10_000
BLOCK = 1024  # antithetic pairs per RNG block


def _seed_seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def block_rng(seed, block: int) -> np.random.Generator:
    ss = _seed_seq(seed)
    child = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (block,))
    return np.random.Generator(np.random.Philox(child))


def _check_p(p):
    if not 0.0 < p < 1.0:
        raise ValueError(f"level p must lie in (0, 1), got {p}")


def _directions(weights: InfluenceWeights, indices=None) -> np.ndarray:
    """Unit-norm rows for the chosen indices, in a fixed draw dimension.

    When vectors are longer than the grid, ``alpha' = QR`` over the whole grid
    and ``alpha Z`` is replaced by ``R'Z`` (same law, fewer draws). The
    reduction uses every row so the draw dimension does not depend on the
    subset, keeping simulated maxima monotone in the set for a fixed seed.
    """
    vec = weights.vectors
    norms = np.linalg.norm(vec, axis=1)
    idx = np.arange(vec.shape[0]) if indices is None else np.asarray(indices, dtype=int)
    if idx.size == 0:
        raise NumericalError("empty set")
    if np.any(norms[idx] <= 0):
        raise NumericalError("zero-norm influence vector inside the set (degenerate standard error)")
    safe = np.where(norms > 0, norms, 1.0)
    alpha = vec / safe[:, None]
    G, m = alpha.shape
    if m > G:
        _, R = np.linalg.qr(alpha.T)
        alpha = R.T
    return alpha[idx]


def simulate_maxima(weights: InfluenceWeights, R: int = DEFAULT_R, seed=0,
                    indices=None) -> np.ndarray:
    """Simulated values of ``max_v alpha(v)'Z`` over ``indices``, in draw order.

    An odd R is rounded up to the next even number so that every antithetic
    pair is complete; this keeps the sign symmetry exact.
    """
    if R < 2:
        raise ValueError("need at least 2 draws")
    alpha = _directions(weights, indices)
    m = alpha.shape[1]
    pairs = (R + 1) // 2
    out = np.empty(2 * pairs)
    for b, start in enumerate(range(0, pairs, BLOCK)):
        size = min(BLOCK, pairs - start)
        Z = block_rng(seed, b).standard_normal((m, size))
        X = alpha @ Z
        out[2 * start:2 * (start + size):2] = X.max(axis=0)
        out[2 * start + 1:2 * (start + size):2] = (-X).max(axis=0)
    return out


def order_stat_quantile(sorted_draws: np.ndarray, p: float) -> float:
    """Empirical quantile at index ceil(p R) (1-based)."""
    R = sorted_draws.size
    j = min(max(math.ceil(p * R - 1e-9), 1), R)
    return float(sorted_draws[j - 1])


def quantile_mc_se(sorted_draws: np.ndarray, p: float) -> float:
    """Standard error of the empirical quantile from binomial order-statistic bounds."""
    R = sorted_draws.size
    half = math.sqrt(R * p * (1 - p))
    lo = min(max(int(math.floor(p * R - half)), 1), R)
    hi = min(max(int(math.ceil(p * R + half)), 1), R)
    return float(sorted_draws[hi - 1] - sorted_draws[lo - 1]) / 2.0


def simulate_ks(weights: InfluenceWeights, ps: Iterable[float], R: int = DEFAULT_R, seed=0,
                indices=None):
    """Simulated critical values for several levels from one set of draws.

    ``indices`` restricts the maximum to a subset of the rows (the estimated
    argmin set); by default every row is used.
    """
    ps = list(ps)
    for p in ps:
        _check_p(p)
    draws = np.sort(simulate_maxima(weights, R, seed, indices))
    seed_val = seed if isinstance(seed, (int, np.integer)) else None
    return {p: CriticalValue(p, order_stat_quantile(draws, p), CVMethod.SIMULATED, R=draws.size,
                             seed=seed_val, mc_se=quantile_mc_se(draws, p))
            for p in ps}


def simulate_k(weights: InfluenceWeights, p: float, R: int = DEFAULT_R, seed=0,
               indices=None) -> CriticalValue:
    return simulate_ks(weights, [p], R, seed, indices)[p]


# --- series: exponential majorant ---------------------------------------------

def exponential_quantile(p: float) -> float:
    _check_p(p)
    return -math.log1p(-p)


def series_kappa(weights: InfluenceWeights, aset: ArgminSet, spacing: float) -> float:
    """Integral over the set of ||d alpha / dv||, by finite differences and trapezoids."""
    vec = weights.vectors
    norms = np.linalg.norm(vec, axis=1)
    if np.any(norms <= 0):
        raise NumericalError("zero-norm influence vector")
    alpha = vec / norms[:, None]
    grad = np.gradient(alpha, spacing, axis=0)
    speed = np.linalg.norm(grad, axis=1)
    idx = aset.indices
    adjacent = np.diff(idx) == 1
    left = idx[:-1][adjacent]
    return float(np.sum(spacing * (speed[left] + speed[left + 1]) / 2.0))


def analytic_series_k(weights: InfluenceWeights, aset: ArgminSet, spacing: float, p: float,
                      R: int = DEFAULT_R, seed=0) -> CriticalValue:
    """``a + c(p)/a`` with ``a = sqrt(2 log(kappa/2pi))`` and exponential ``c``.

    ``weights`` cover the full 1-d grid (derivatives need neighbours).
    Falls back to simulation when the set is a single point or kappa <= 2 pi.
    """
    _check_p(p)
    kappa = series_kappa(weights, aset, spacing) if len(aset) > 1 else 0.0
    if kappa / (2 * math.pi) <= 1.0:
        warnings.warn(f"series analytic constant undefined (kappa={kappa:.4g}); using simulation",
                      RuntimeWarning, stacklevel=2)
        cv = simulate_k(weights, p, R, seed, aset.indices)
        return CriticalValue(cv.p, cv.k, cv.method, R=cv.R, seed=cv.seed, mc_se=cv.mc_se,
                             notes=("fallback: kappa <= 2pi",))
    a = math.sqrt(2.0 * math.log(kappa / (2 * math.pi)))
    k = a + exponential_quantile(p) / a
    return CriticalValue(p, k, CVMethod.SERIES_EXPONENTIAL, a_n=a, b_n=a)


# --- kernel: Gumbel family ------------------------------------------------------

def gumbel_quantile(p: float) -> float:
    _check_p(p)
    return -math.log(math.log(1.0 / p))


def kernel_a_n(measure: float, h: float, d: int = 1, lam: float = KERNEL_LAMBDA):
    """Largest root of ``mes h^-d lam^(d/2) (2pi)^-((d+1)/2) a^(d-1) exp(-a^2/2) = 1``.

    Returns None when no positive root exists (callers fall back to simulation).
    """
    if not (measure > 0 and h > 0):
        raise ValueError("measure and bandwidth must be positive")
    if d == 1:
        a2 = 2.0 * math.log(measure / h) + 2.0 * math.log(math.sqrt(lam) / (2 * math.pi))
        return math.sqrt(a2) if a2 > 0 else None
    const = measure * h ** -d * lam ** (d / 2) * (2 * math.pi) ** (-(d + 1) / 2)

    def f(a):
        return math.log(const) + (d - 1) * math.log(a) - a * a / 2

    lo, hi = 1.0, 100.0
    if f(hi) > 0:
        return None
    # the log-equation is concave in a; scan down from the top for the last sign change
    xs = np.linspace(lo, hi, 2000)
    vals = np.array([f(x) for x in xs])
    pos = np.flatnonzero(vals > 0)
    if pos.size == 0:
        return None
    i = pos[-1]
    return float(optimize.brentq(f, xs[i], xs[i + 1], xtol=1e-12))


def analytic_kernel_k(a_n: float, p: float, variant: CVMethod = CVMethod.KERNEL_GUMBEL,
                      measure: float | None = None, h: float | None = None,
                      lam: float = KERNEL_LAMBDA) -> CriticalValue:
    _check_p(p)
    c = gumbel_quantile(p)
    if variant is CVMethod.KERNEL_HARDLE_LINTON:
        if measure is None or h is None:
            raise ValueError("the Hardle-Linton form needs the set measure and bandwidth")
        a2 = 2.0 * math.log(measure / h)
        if a2 <= 0:
            raise NumericalError("Hardle-Linton a_n undefined (set narrower than bandwidth)")
        a = math.sqrt(a2)
        b = a + math.log(math.sqrt((lam / (2 * math.pi)) / a))
        return CriticalValue(p, b + c / a, variant, a_n=a, b_n=b)
    if not (a_n and a_n > 0):
        raise ValueError("a_n must be positive")
    if variant is CVMethod.KERNEL_GUMBEL_APPROX:
        inner = a_n * a_n + 2.0 * c
        if inner >= 0:
            return CriticalValue(p, math.sqrt(inner), variant, a_n=a_n, b_n=a_n)
        variant = CVMethod.KERNEL_GUMBEL
        note = ("fallback: a_n^2 < 2 log log(1/p)",)
    else:
        note = ()
    if variant is not CVMethod.KERNEL_GUMBEL:
        raise ValueError(f"not a kernel analytic method: {variant}")
    return CriticalValue(p, a_n + c / a_n, CVMethod.KERNEL_GUMBEL, a_n=a_n, b_n=a_n, notes=note)


# --- brute-force oracle ---------------------------------------------------------

def bruteforce_sup_quantile(cov, p: float, draws: int = 100_000, seed=12345,
                            repair_tol: float = 1e-8) -> float:
    """p-quantile of the max of a multivariate normal with the given correlation."""
    _check_p(p)
    cov = np.asarray(cov, dtype=float)
    m = cov.shape[0]
    if m > 50:
        raise ValueError("brute-force oracle is limited to 50 points")
    sd = np.sqrt(np.diag(cov))
    if np.any(sd <= 0):
        raise ValueError("zero variance in covariance")
    corr = cov / np.outer(sd, sd)
    w = np.linalg.eigvalsh(corr)
    if w.min() < -repair_tol * m:
        raise ValueError(f"covariance not PSD (min eigenvalue {w.min():.3g})")
    jitter = 0.0
    for _ in range(12):
        try:
            L = np.linalg.cholesky(corr + jitter * np.eye(m))
            break
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10, 1e-12)
    else:
        raise ValueError("could not repair covariance to PSD")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((draws, m)) @ L.T
    return float(np.quantile(X.max(axis=1), p))


def normal_quantile(p):
    return float(stats.norm.ppf(p))
