"""Estimation of the epsilon-argmin (argmax for lower bounds) set on the grid."""
from __future__ import annotations

import math

import numpy as np

from .data import ArgminSet, BoundCurve, Side

PARAMETRIC = "parametric"
NONPARAMETRIC = "nonparametric"


def estimate_Veps(curve: BoundCurve, epsilon: float = 0.0, mode: str = NONPARAMETRIC) -> ArgminSet:
    """Grid points whose estimate is within ``ell_n * c_n + epsilon`` of the optimum.

    ``ell_n = 2 sqrt(log n) sup s`` and ``c_n`` is 1 (parametric) or
    ``sqrt(log n)`` (nonparametric).
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    n = curve.n
    if n < 2:
        raise ValueError("need n >= 2")
    root_log_n = math.sqrt(math.log(n))
    ell_n = 2.0 * root_log_n * float(np.max(curve.se))
    if mode == PARAMETRIC:
        c_n = 1.0
    elif mode == NONPARAMETRIC:
        c_n = root_log_n
    else:
        raise ValueError(f"unknown mode {mode!r}")
    th = curve.theta_hat
    slack = ell_n * c_n + epsilon
    if curve.side is Side.UPPER:
        threshold = float(th.min()) + slack
        idx = np.flatnonzero(th <= threshold)
    else:
        threshold = float(th.max()) - slack
        idx = np.flatnonzero(th >= threshold)
    return ArgminSet(idx, threshold, epsilon, ell_n, c_n)


def full_set(curve: BoundCurve) -> ArgminSet:
    """The whole working grid, used when the set is not estimated."""
    G = len(curve.grid)
    th = curve.theta_hat
    thr = float(th.max()) if curve.side is Side.UPPER else float(th.min())
    return ArgminSet(np.arange(G), thr, math.inf, 0.0, 0.0)


def set_measure(aset: ArgminSet, curve: BoundCurve) -> float:
    """Lebesgue measure of the set: member count times the grid cell size."""
    return len(aset) * curve.grid.cell_volume
