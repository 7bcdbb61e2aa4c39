"""Small hand-built curves and weights shared by the test modules."""
import math

import numpy as np

from intbounds.data import BoundCurve, EstimatorKind, EvaluationGrid, InfluenceWeights, Side


def curve_of(theta, se, side=Side.UPPER, n=100, kind=EstimatorKind.SERIES, smoothing=None):
    theta = np.asarray(theta, dtype=float)
    grid = EvaluationGrid.linspace(0.0, 1.0, theta.size) if theta.size > 1 else \
        EvaluationGrid(np.array([0.0]), 0.0, 1.0, 1.0)
    se = np.broadcast_to(np.asarray(se, dtype=float), theta.shape)
    return BoundCurve(grid, theta, se, side, n, kind, smoothing)


def weights_for(vectors, n=100):
    return InfluenceWeights(np.asarray(vectors, dtype=float), math.sqrt(n))


def random_weights(rng, m, K):
    """m influence vectors of length K, smooth-ish so neighbours correlate."""
    base = rng.standard_normal((K, K))
    t = np.linspace(0, 1, m)
    phases = np.outer(t, np.arange(1, K + 1)) * rng.uniform(0.5, 3.0)
    return InfluenceWeights(np.cos(phases) @ base + 0.1 * rng.standard_normal((m, K)), 10.0)


def correlation(weights):
    a = weights.vectors / weights.norms[:, None]
    return a @ a.T
