"""Domain types shared by the estimators and the inference engine.

Everything here is an immutable dataclass holding numpy arrays. Constructors
validate their invariants so a malformed curve fails where it is built rather
than deep inside a critical-value simulation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np


class Side(str, Enum):
    UPPER = "upper"  # bound is an infimum over v
    LOWER = "lower"  # bound is a supremum over v


class EstimatorKind(str, Enum):
    DISCRETE = "discrete"
    SERIES = "series"
    LOCAL_LINEAR = "local-linear"


class Target(str, Enum):
    LOWER_BOUND = "lower"
    UPPER_BOUND = "upper"


class CVMethod(str, Enum):
    SIMULATED = "simulated"
    SERIES_EXPONENTIAL = "series-exponential"
    KERNEL_GUMBEL = "kernel-gumbel"
    KERNEL_GUMBEL_APPROX = "kernel-gumbel-approx"
    KERNEL_HARDLE_LINTON = "kernel-hardle-linton"


class DataError(ValueError):
    """Input data violates a schema or domain precondition."""


class NumericalError(RuntimeError):
    """A numerical step could not be completed (rank deficiency, empty window...)."""


def _freeze(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Sample:
    y: np.ndarray
    z: np.ndarray
    v: np.ndarray  # shape (n, d)

    def __post_init__(self):
        y = _freeze(self.y).ravel()
        z = _freeze(self.z).ravel()
        v = np.array(self.v, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        v.setflags(write=False)
        if y.size == 0:
            raise DataError("empty sample")
        if not (y.size == z.size == v.shape[0]):
            raise DataError(f"column lengths differ: y={y.size}, z={z.size}, v={v.shape[0]}")
        for name, arr in (("y", y), ("z", z), ("v", v)):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"non-finite values in column {name}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def d(self) -> int:
        return self.v.shape[1]

    @property
    def v1(self) -> np.ndarray:
        """The covariate as a flat vector; only valid when d == 1."""
        if self.d != 1:
            raise DataError(f"estimator requires a scalar covariate, got d={self.d}")
        return self.v[:, 0]

    def with_y(self, y) -> "Sample":
        return Sample(y=y, z=self.z, v=self.v)


@dataclass(frozen=True)
class TransformSpec:
    t: float
    y0: float
    y1: float
    target: Target = Target.LOWER_BOUND
    mtr: bool = False  # use 1{t >= z} instead of 1{z == t}

    def __post_init__(self):
        if not self.y0 <= self.y1:
            raise DataError(f"support endpoints out of order: y0={self.y0} > y1={self.y1}")


def transform_outcome(sample: Sample, spec: TransformSpec) -> Sample:
    """Replace y by the bound-generating outcome for one side.

    MIV form: ``y * 1{z == t} + y0 * 1{z != t}`` (``y1`` for the upper bound).
    With ``spec.mtr`` the indicator is ``1{t >= z}`` for the lower bound and
    ``1{t <= z}`` for the upper bound.
    """
    if not (np.isfinite(spec.t) and np.isfinite(spec.y0) and np.isfinite(spec.y1)):
        raise DataError("non-finite transform parameters")
    y, z = sample.y, sample.z
    if spec.target is Target.LOWER_BOUND:
        keep = (spec.t >= z) if spec.mtr else (z == spec.t)
        fill = spec.y0
    else:
        keep = (spec.t <= z) if spec.mtr else (z == spec.t)
        fill = spec.y1
    return sample.with_y(np.where(keep, y, fill))


@dataclass(frozen=True)
class EvaluationGrid:
    points: np.ndarray  # shape (G,) for d == 1, (G, d) otherwise
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    measure: float

    def __post_init__(self):
        pts = _freeze(self.points)
        lo = np.atleast_1d(_freeze(self.domain_lo))
        hi = np.atleast_1d(_freeze(self.domain_hi))
        if pts.size == 0:
            raise DataError("empty grid")
        if not self.measure > 0:
            raise DataError(f"grid measure must be positive, got {self.measure}")
        if pts.ndim == 1:
            if np.any(np.diff(pts) <= 0):
                raise DataError("grid points must be strictly increasing")
        else:
            if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
                raise DataError("grid points must be distinct")
        p2 = pts.reshape(pts.shape[0], -1)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(p2))))
        if np.any(p2 < lo - tol) or np.any(p2 > hi + tol):
            raise DataError("grid points outside the domain")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "domain_lo", lo)
        object.__setattr__(self, "domain_hi", hi)

    def __len__(self):
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return 1 if self.points.ndim == 1 else self.points.shape[1]

    @property
    def cell_volume(self) -> float:
        """Volume attributed to one grid point (spacing for a 1-d grid)."""
        G = len(self)
        if self.d == 1:
            return self.measure / (G - 1) if G > 1 else self.measure
        return self.measure / G

    @classmethod
    def linspace(cls, lo: float, hi: float, G: int) -> "EvaluationGrid":
        if G < 2:
            raise DataError("grid needs at least 2 points")
        if not hi > lo:
            raise DataError(f"degenerate domain [{lo}, {hi}]")
        return cls(np.linspace(lo, hi, G), lo, hi, hi - lo)

    def restrict(self, lo: float | None = None, hi: float | None = None) -> "EvaluationGrid":
        lo = float(self.domain_lo[0]) if lo is None else lo
        hi = float(self.domain_hi[0]) if hi is None else hi
        return EvaluationGrid.linspace(lo, hi, len(self))


def build_grid(sample: Sample, G: int = 200, trim_lo: float = 5.0,
               hi: Optional[float] = None, lo: Optional[float] = None) -> EvaluationGrid:
    """Equally spaced grid from the ``trim_lo`` percentile of v up to ``hi``.

    When ``hi`` is unset the upper end is the ``100 - trim_lo`` percentile.
    ``lo`` overrides the lower percentile. Only d == 1 is gridded here; use
    :func:`lattice_grid` for d > 1.
    """
    if G < 2:
        raise DataError("grid needs at least 2 points")
    v = sample.v1
    if np.ptp(v) == 0:
        raise DataError("degenerate covariate: all v equal")
    a = float(np.percentile(v, trim_lo)) if lo is None else float(lo)
    b = float(np.percentile(v, 100.0 - trim_lo)) if hi is None else float(hi)
    if not b > a:
        raise DataError(f"empty working domain [{a}, {b}]")
    return EvaluationGrid.linspace(a, b, G)


def lattice_grid(sample: Sample, per_axis: int = 15, trim_lo: float = 5.0) -> EvaluationGrid:
    """Tensor-product grid over trimmed percentile boxes, for d > 1."""
    v = sample.v
    lo = np.percentile(v, trim_lo, axis=0)
    hi = np.percentile(v, 100.0 - trim_lo, axis=0)
    if np.any(hi <= lo):
        raise DataError("degenerate covariate in at least one dimension")
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, v.shape[1])
    return EvaluationGrid(mesh, lo, hi, float(np.prod(hi - lo)))


@dataclass(frozen=True)
class BoundCurve:
    grid: EvaluationGrid
    theta_hat: np.ndarray
    se: np.ndarray
    side: Side
    n: int
    estimator_kind: EstimatorKind
    smoothing: Optional[float] = None  # K for series, h for kernel

    def __post_init__(self):
        th = _freeze(self.theta_hat)
        se = _freeze(self.se)
        G = len(self.grid)
        if th.shape != (G,) or se.shape != (G,):
            raise DataError(f"curve arrays must have length {G}")
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(se))):
            raise NumericalError("non-finite curve values")
        if np.any(se < 0):
            raise DataError("negative standard error")
        object.__setattr__(self, "theta_hat", th)
        object.__setattr__(self, "se", se)
        object.__setattr__(self, "side", Side(self.side))

    def with_side(self, side: Side) -> "BoundCurve":
        return BoundCurve(self.grid, self.theta_hat, self.se, side, self.n,
                          self.estimator_kind, self.smoothing)


@dataclass(frozen=True)
class InfluenceWeights:
    """Rows are g(v) (series/discrete, length K) or w_n(v) (kernel, length n)."""
    vectors: np.ndarray  # (G, m)
    scale: float  # se = ||vector|| / scale up to estimation error

    def __post_init__(self):
        vec = _freeze(self.vectors)
        if vec.ndim != 2:
            raise DataError("influence vectors must be a 2-d array")
        object.__setattr__(self, "vectors", vec)

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)

    def norm_consistency(self, se: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.norms / (self.scale * np.asarray(se))

    def restrict(self, indices) -> "InfluenceWeights":
        return InfluenceWeights(self.vectors[np.asarray(indices)], self.scale)


@dataclass(frozen=True)
class ArgminSet:
    indices: np.ndarray
    threshold: float
    epsilon: float
    ell_n: float
    c_n: float

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        if idx.size == 0:
            raise NumericalError("argmin set is empty")
        idx = np.unique(idx)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return self.indices.size


@dataclass(frozen=True)
class CriticalValue:
    p: float
    k: float
    method: CVMethod
    a_n: Optional[float] = None
    b_n: Optional[float] = None
    R: Optional[int] = None
    seed: Optional[int] = None
    mc_se: Optional[float] = None  # Monte Carlo standard error of k, simulation only
    notes: tuple = field(default_factory=tuple)
