"""Precision-corrected bound estimates and confidence intervals."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import norm

from . import critical
from .argmin import set_measure
from .data import (ArgminSet, BoundCurve, CVMethod, CriticalValue, EstimatorKind,
                   InfluenceWeights, Side)

LOG_N = "logn"
SIGMA_RULE = "sigma"


@dataclass(frozen=True)
class OneSidedResult:
    p: float
    theta_p: float
    side: Side
    k_used: CriticalValue
    set_used: ArgminSet
    argopt_index: int


@dataclass(frozen=True)
class TwoSidedInterval:
    lo: float
    hi: float
    level: float
    kind: str  # "identified-set" or "parameter"
    p_used: tuple
    delta_hat: Optional[float] = None
    p_hat_n: Optional[float] = None
    tau_n: Optional[float] = None
    sigma_n: Optional[float] = None
    notes: tuple = field(default_factory=tuple)

    @property
    def crossed(self) -> bool:
        """Estimated bounds cross; the interval is then reported as empty."""
        return self.lo > self.hi


def precision_corrected_bound(curve: BoundCurve, aset: ArgminSet, cv: CriticalValue) -> OneSidedResult:
    """Optimise ``theta_hat +/- k * se`` over the set members only."""
    if not math.isfinite(cv.k):
        raise ValueError("critical value must be finite")
    idx = aset.indices
    th, se = curve.theta_hat[idx], curve.se[idx]
    if curve.side is Side.UPPER:
        corrected = th + cv.k * se
        j = int(np.argmin(corrected))
    else:
        corrected = th - cv.k * se
        j = int(np.argmax(corrected))
    return OneSidedResult(cv.p, float(corrected[j]), curve.side, cv, aset, int(idx[j]))


def analog_bound(curve: BoundCurve, aset: ArgminSet | None = None) -> float:
    th = curve.theta_hat if aset is None else curve.theta_hat[aset.indices]
    return float(th.min() if curve.side is Side.UPPER else th.max())


class BoundInference:
    """Critical values and corrected bounds for one side, at any level.

    Simulated draws are made once and reused for every level, so the bound
    is monotone in p for a fixed seed.
    """

    def __init__(self, curve: BoundCurve, weights: InfluenceWeights, aset: ArgminSet,
                 method: CVMethod = CVMethod.SIMULATED, R: int = critical.DEFAULT_R, seed=0):
        self.curve, self.weights, self.aset = curve, weights, aset
        self.method = CVMethod(method)
        self.R, self.seed = R, seed
        self._draws = None

    def _sorted_draws(self):
        if self._draws is None:
            self._draws = np.sort(critical.simulate_maxima(self.weights, self.R, self.seed,
                                                           self.aset.indices))
        return self._draws

    def _simulated(self, p, notes=()):
        d = self._sorted_draws()
        seed = self.seed if isinstance(self.seed, (int, np.integer)) else None
        return CriticalValue(p, critical.order_stat_quantile(d, p), CVMethod.SIMULATED, R=d.size,
                             seed=seed, mc_se=critical.quantile_mc_se(d, p), notes=notes)

    def critical_value(self, p: float) -> CriticalValue:
        critical._check_p(p)
        m = self.method
        if m is CVMethod.SIMULATED:
            return self._simulated(p)
        if m is CVMethod.SERIES_EXPONENTIAL:
            if self.curve.grid.d != 1:
                return self._simulated(p, ("d > 1: analytic series constant unavailable",))
            return critical.analytic_series_k(self.weights, self.aset, self.curve.grid.cell_volume,
                                              p, self.R, self.seed)
        # kernel analytic forms
        h = self.curve.smoothing
        if self.curve.estimator_kind is not EstimatorKind.LOCAL_LINEAR or not h:
            raise ValueError(f"{m.value} critical values need a local-linear curve")
        measure = set_measure(self.aset, self.curve)
        d = self.curve.grid.d
        if m is CVMethod.KERNEL_HARDLE_LINTON:
            if measure / h <= 1.0:
                return self._simulated(p, ("fallback: set narrower than bandwidth",))
            return critical.analytic_kernel_k(0.0, p, m, measure=measure, h=h)
        a_n = critical.kernel_a_n(measure, h, d)
        if a_n is None:
            warnings.warn("kernel a_n undefined for this set; using simulation", RuntimeWarning,
                          stacklevel=2)
            return self._simulated(p, ("fallback: a_n undefined",))
        return critical.analytic_kernel_k(a_n, p, m)

    def at(self, p: float) -> OneSidedResult:
        return precision_corrected_bound(self.curve, self.aset, self.critical_value(p))

    def analog(self) -> float:
        return analog_bound(self.curve, self.aset)


def half_median_unbiased(curve, weights, aset, method=CVMethod.SIMULATED, R=critical.DEFAULT_R,
                         seed=0) -> OneSidedResult:
    return BoundInference(curve, weights, aset, method, R, seed).at(0.5)


def ci_identified_set(lower: OneSidedResult, upper: OneSidedResult) -> TwoSidedInterval:
    """Bonferroni interval from two one-sided bands at the same level 1 - alpha/2."""
    if lower.side is not Side.LOWER or upper.side is not Side.UPPER:
        raise ValueError("need a lower-side and an upper-side result")
    if not math.isclose(lower.p, upper.p, rel_tol=0, abs_tol=1e-12):
        raise ValueError(f"mismatched levels: {lower.p} vs {upper.p}")
    level = 1.0 - 2.0 * (1.0 - lower.p)
    notes = ("bounds cross: interval empty",) if lower.theta_p > upper.theta_p else ()
    return TwoSidedInterval(lower.theta_p, upper.theta_p, level, "identified-set", (lower.p,),
                            notes=notes)


def p_hat(delta_hat: float, tau: float, alpha: float) -> float:
    return 1.0 - norm.cdf(tau * max(delta_hat, 0.0)) * alpha


def ci_parameter(lower: BoundInference, upper: BoundInference, alpha: float = 0.05,
                 tau_rule: str = SIGMA_RULE) -> TwoSidedInterval:
    """Interval for the true parameter with adaptive level p_hat in [1-a, 1-a/2]."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    n = lower.curve.n
    delta = upper.at(0.5).theta_p - lower.at(0.5).theta_p
    notes = []
    sigma = None
    if tau_rule == SIGMA_RULE:
        # the lower band decreases in p, so its spread is taken in absolute value
        sigma = max(upper.at(0.75).theta_p - upper.at(0.25).theta_p,
                    abs(lower.at(0.75).theta_p - lower.at(0.25).theta_p))
        if sigma > 0:
            tau = 1.0 / (sigma * math.log(n))
        else:
            warnings.warn("sigma_n is zero; using tau_n = log n", RuntimeWarning, stacklevel=2)
            notes.append("fallback: tau_n = log n")
            tau = math.log(n)
    elif tau_rule == LOG_N:
        tau = math.log(n)
    else:
        raise ValueError(f"unknown tau rule {tau_rule!r}")
    ph = p_hat(delta, tau, alpha)
    lo, hi = lower.at(ph).theta_p, upper.at(ph).theta_p
    if lo > hi:
        notes.append("bounds cross: interval empty")
    return TwoSidedInterval(lo, hi, 1.0 - alpha, "parameter", (ph,), delta_hat=delta,
                            p_hat_n=ph, tau_n=tau, sigma_n=sigma, notes=tuple(notes))


def test_nonnegativity(curve: BoundCurve, weights: InfluenceWeights, aset: ArgminSet,
                       alpha: float = 0.05, method=CVMethod.SIMULATED, R=critical.DEFAULT_R,
                       seed=0):
    """Test ``inf_v theta(v) >= 0``; reject when the corrected infimum is negative."""
    if curve.side is not Side.UPPER:
        raise ValueError("the moment-inequality test uses an infimum (upper-side) curve")
    res = BoundInference(curve, weights, aset, method, R, seed).at(1.0 - alpha)
    return {"reject": bool(res.theta_p < 0.0), "theta_alpha": res.theta_p, "result": res}


test_nonnegativity.__test__ = False  # not a pytest test
