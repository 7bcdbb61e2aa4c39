"""Simulation study: MIV lower bound under two designs, analog vs corrected.

Each replication draws a sample, transforms the outcome for the lower bound
on E[Y(1) | V = 1.5], fits a series or local-linear estimator on a trimmed
grid, and records the analog supremum and the corrected bounds. All reported
comparisons are on the lower (supremum) side.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import norm

from . import critical
from .argmin import NONPARAMETRIC, estimate_Veps, full_set
from .data import (CVMethod, EvaluationGrid, NumericalError, Sample, Side, Target,
                   TransformSpec, transform_outcome)
from .inference import BoundInference
from .kernel import fit_kernel, kernel_curve
from .series import fit_series, select_K, series_curve

log = logging.getLogger(__name__)

DOMAIN = (-2.0, 1.5)
Y0 = -1.96
V_STAR = 1.5
SERIES = "series"
LOCAL_LINEAR = "local-linear"


@dataclass(frozen=True)
class DgpSpec:
    kind: int  # 1 or 2
    n: int

    def __post_init__(self):
        if self.kind not in (1, 2):
            raise ValueError(f"unknown DGP {self.kind}; expected 1 or 2")
        if self.n < 50:
            raise ValueError("n must be at least 50")


def _phi0(kind, v):
    if kind == 1:
        return np.zeros_like(v)
    return np.where(v <= 1.0, v, 1.0)


def _mu0(kind, v):
    return np.zeros_like(v) if kind == 1 else 2.0 * _phi0(2, v)


def dgp_sample(spec: DgpSpec, seed) -> Sample:
    """V ~ U[-2, 2]; Z = 1{phi0(V) + e > 0}; Y = mu0(V) + |V| clip(eta, +-1.96)."""
    rng = np.random.default_rng(seed)
    n = spec.n
    v = rng.uniform(-2.0, 2.0, n)
    eps = rng.standard_normal(n)
    eta = rng.standard_normal(n)
    u = np.clip(eta, -1.96, 1.96)
    z = (_phi0(spec.kind, v) + eps > 0).astype(float)
    y = _mu0(spec.kind, v) + np.abs(v) * u
    return Sample(y=y, z=z, v=v)


def true_theta_l(spec: DgpSpec, v):
    """E[Y 1{Z=1} + y0 1{Z!=1} | V=v] for the design."""
    v = np.asarray(v, dtype=float)
    phi = _phi0(spec.kind, v)
    return _mu0(spec.kind, v) * norm.cdf(phi) + Y0 * norm.cdf(-phi)


def true_bound(spec: DgpSpec) -> float:
    """Supremum of the bound-generating function over the working domain."""
    grid = np.linspace(*DOMAIN, 3501)
    return float(np.max(true_theta_l(spec, grid)))


@dataclass(frozen=True)
class McConfig:
    dgp: int = 1
    n: int = 500
    estimator: str = SERIES
    estimate_V: bool = False
    cv_method: str = CVMethod.SIMULATED.value
    reps: int = 1000
    p_list: tuple = (0.5, 0.95)
    seed: int = 20090717
    R: int = critical.DEFAULT_R
    grid_points: int = 200
    trim_pct: float = 5.0
    epsilon: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.estimator not in (SERIES, LOCAL_LINEAR):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        DgpSpec(self.dgp, self.n)
        object.__setattr__(self, "p_list", tuple(sorted(set(self.p_list) | {0.5})))


@dataclass
class Replication:
    index: int
    ok: bool
    analog: float = math.nan
    theta: dict = field(default_factory=dict)
    smoothing: float = math.nan
    set_lo: float = math.nan
    set_hi: float = math.nan
    error: str = ""


def rep_seeds(master: int, index: int):
    """Independent data and critical-value streams for one replication."""
    base = np.random.SeedSequence(master, spawn_key=(index,))
    data = np.random.SeedSequence(base.entropy, spawn_key=(index, 0))
    cv = np.random.SeedSequence(base.entropy, spawn_key=(index, 1))
    return data, cv


def fit_curve(sample: Sample, grid: EvaluationGrid, estimator: str, side=Side.LOWER):
    if estimator == SERIES:
        K = select_K(sample)
        return series_curve(fit_series(sample, K), grid, side)
    fit = fit_kernel(sample, grid)
    return kernel_curve(fit, sample, grid, side)


def run_replication(cfg: McConfig, index: int) -> Replication:
    data_seed, cv_seed = rep_seeds(cfg.seed, index)
    spec = DgpSpec(cfg.dgp, cfg.n)
    try:
        raw = dgp_sample(spec, data_seed)
        sample = transform_outcome(raw, TransformSpec(t=1.0, y0=Y0, y1=-Y0,
                                                      target=Target.LOWER_BOUND))
        lo = float(np.percentile(sample.v1, cfg.trim_pct))
        grid = EvaluationGrid.linspace(lo, V_STAR, cfg.grid_points)
        curve, weights = fit_curve(sample, grid, cfg.estimator)
        if cfg.estimate_V:
            aset = estimate_Veps(curve, cfg.epsilon, NONPARAMETRIC)
        else:
            aset = full_set(curve)
        inf = BoundInference(curve, weights, aset, CVMethod(cfg.cv_method), cfg.R, cv_seed)
        theta = {p: inf.at(p).theta_p for p in cfg.p_list}
        pts = np.asarray(grid.points)[aset.indices]
        return Replication(index, True, analog=inf.analog(), theta=theta,
                           smoothing=float(curve.smoothing), set_lo=float(pts.min()),
                           set_hi=float(pts.max()))
    except (NumericalError, ValueError, np.linalg.LinAlgError) as exc:
        return Replication(index, False, error=f"{type(exc).__name__}: {exc}")


def _run_chunk(args):
    cfg, indices = args
    return [run_replication(cfg, i) for i in indices]


def run_replications(cfg: McConfig) -> list:
    idx = list(range(cfg.reps))
    if cfg.workers <= 1:
        reps = [run_replication(cfg, i) for i in idx]
    else:
        chunks = [idx[i::cfg.workers * 4] for i in range(cfg.workers * 4)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            reps = [r for part in pool.map(_run_chunk, [(cfg, c) for c in chunks]) for r in part]
    return sorted(reps, key=lambda r: r.index)


@dataclass(frozen=True)
class MethodMetrics:
    mean_bias: float
    median_bias: float
    sd: float  # population (ddof=0) so that rmse^2 = mean_bias^2 + sd^2
    mad: float  # mean absolute deviation from the true bound
    rmse: float
    coverage: dict  # p -> fraction of replications with theta_p <= theta0


def method_metrics(est: np.ndarray, theta0: float, covers: dict | None = None) -> MethodMetrics:
    est = np.sort(est)  # sorted reduction keeps sums order-independent
    err = est - theta0
    mean_bias = float(np.mean(err))
    return MethodMetrics(mean_bias=mean_bias, median_bias=float(np.median(err)),
                         sd=float(np.std(err)), mad=float(np.mean(np.abs(err))),
                         rmse=float(math.sqrt(np.mean(err ** 2))), coverage=covers or {})


@dataclass(frozen=True)
class McMetrics:
    config: McConfig
    theta0: float
    analog: MethodMetrics
    new: MethodMetrics
    avg_smoothing: float
    avg_set: tuple
    completed: int
    failed: int
    single_rep: bool  # sd is 0 by construction when reps == 1


class ExperimentAborted(RuntimeError):
    pass


def summarize(cfg: McConfig, reps: Sequence[Replication]) -> McMetrics:
    good = [r for r in reps if r.ok]
    failed = len(reps) - len(good)
    if failed > 0.01 * len(reps):
        msgs = sorted({r.error for r in reps if not r.ok})
        raise ExperimentAborted(f"{failed}/{len(reps)} replications failed: " + "; ".join(msgs[:5]))
    theta0 = true_bound(DgpSpec(cfg.dgp, cfg.n))
    analog = np.array([r.analog for r in good])
    new = np.array([r.theta[0.5] for r in good])
    cover = {p: float(np.mean(np.array([r.theta[p] for r in good]) <= theta0)) for p in cfg.p_list}
    return McMetrics(cfg, theta0, method_metrics(analog, theta0), method_metrics(new, theta0, cover),
                     float(np.mean(np.sort([r.smoothing for r in good]))),
                     (float(np.mean(np.sort([r.set_lo for r in good]))),
                      float(np.mean(np.sort([r.set_hi for r in good])))),
                     len(good), failed, len(good) == 1)


def run_experiment(cfg: McConfig) -> McMetrics:
    return summarize(cfg, run_replications(cfg))


TABLE1_CONFIGS = [
    (est, dgp, n, ev)
    for est in (SERIES, LOCAL_LINEAR)
    for dgp in (1, 2)
    for n in (500, 1000)
    for ev in (False, True)
]

COLUMNS = ["estimator", "dgp", "n", "avg_smoothing", "estimate_V", "method", "mean_bias",
           "median_bias", "sd", "mad", "rmse", "cov_0.50", "cov_0.95"]


def metrics_rows(m: McMetrics) -> list:
    c = m.config
    rows = []
    for name, mm in (("Analog", m.analog), ("New", m.new)):
        rows.append({
            "estimator": c.estimator, "dgp": c.dgp, "n": c.n,
            "avg_smoothing": round(m.avg_smoothing, 3),
            "estimate_V": "Yes" if c.estimate_V else "No", "method": name,
            "mean_bias": round(mm.mean_bias, 3), "median_bias": round(mm.median_bias, 3),
            "sd": round(mm.sd, 3), "mad": round(mm.mad, 3), "rmse": round(mm.rmse, 3),
            "cov_0.50": round(mm.coverage[0.5], 3) if 0.5 in mm.coverage else "",
            "cov_0.95": round(mm.coverage[0.95], 3) if 0.95 in mm.coverage else "",
        })
    return rows


def to_csv(metrics: Sequence[McMetrics]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for m in metrics:
        w.writerows(metrics_rows(m))
    return buf.getvalue()


def to_table(metrics: Sequence[McMetrics]) -> str:
    """Aligned text table, one row per method and configuration."""
    rows = [r for m in metrics for r in metrics_rows(m)]
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in COLUMNS}
    line = "  ".join(c.rjust(widths[c]) for c in COLUMNS)
    out = [line, "-" * len(line)]
    for r in rows:
        out.append("  ".join(str(r[c]).rjust(widths[c]) for c in COLUMNS))
    return "\n".join(out)


def config_dict(cfg: McConfig) -> dict:
    return asdict(cfg)
