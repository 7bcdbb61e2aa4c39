"""Command-line entry points: ``estimate``, ``mc`` and ``cv``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, critical
from .argmin import NONPARAMETRIC, PARAMETRIC, estimate_Veps, full_set, set_measure
from .data import (BoundCurve, CVMethod, DataError, EstimatorKind, EvaluationGrid,
                   InfluenceWeights, NumericalError, Sample, Side, Target, TransformSpec,
                   build_grid, transform_outcome)
from .discrete import discrete_curve, fit_discrete
from .inference import (BoundInference, SIGMA_RULE, ci_identified_set, ci_parameter)
from .kernel import fit_kernel, kernel_curve
from .montecarlo import (LOCAL_LINEAR, SERIES, TABLE1_CONFIGS, ExperimentAborted, McConfig,
                         config_dict, run_experiment, to_csv, to_table)
from .series import fit_series, select_K, series_curve

log = logging.getLogger("intbounds")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

CONFIG_KEYS = {"estimator", "side", "t", "y0", "y1", "grid_points", "trim_pct", "epsilon",
               "cv_method", "R", "alpha", "p", "tau_rule", "seed", "K", "h"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# --- input -----------------------------------------------------------------------

def read_sample(path) -> Sample:
    """Read a ``y,z,v`` (or ``y,z,v1,...,vd``) CSV with row-level diagnostics."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{path}: empty file")
    if header[:2] != ["y", "z"] or len(header) < 3:
        raise DataError(f"{path}: header must start with y,z followed by v or v1..vd; got {header}")
    vcols = header[2:]
    if vcols != ["v"] and vcols != [f"v{i + 1}" for i in range(len(vcols))]:
        raise DataError(f"{path}: covariate columns must be 'v' or 'v1,...,vd'; got {vcols}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        vals = []
        for col, cell in zip(header, row):
            try:
                x = float(cell)
            except ValueError:
                raise DataError(f"{path}:{lineno}: column {col!r}: cannot parse {cell!r} as a number")
            if not np.isfinite(x):
                raise DataError(f"{path}:{lineno}: column {col!r}: non-finite value {cell!r}")
            vals.append(x)
        rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    a = np.array(rows)
    return Sample(y=a[:, 0], z=a[:, 1], v=a[:, 2:])


def read_config(path) -> dict:
    """Flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = val
    return out


def _floats(s):
    return [float(x) for x in str(s).split(",") if x.strip()]


# --- estimate ----------------------------------------------------------------------

ESTIMATE_DEFAULTS = dict(estimator=SERIES, side="both", t=1.0, y0=None, y1=None, grid_points=200,
                         trim_pct=5.0, epsilon=None, cv_method=CVMethod.SIMULATED.value,
                         R=critical.DEFAULT_R, alpha=0.05, p="0.5,0.95", tau_rule=SIGMA_RULE,
                         seed=0, K=None, h=None, mtr=False, v_star=None, ci="none",
                         no_estimate_V=False)


def _resolve(args) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(ESTIMATE_DEFAULTS)
    if getattr(args, "manifest", None):
        cfg.update(json.loads(Path(args.manifest).read_text())["config"])
    if args.config:
        cfg.update(read_config(args.config))
    for key in ESTIMATE_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    conv = dict(t=float, grid_points=int, trim_pct=float, R=int, alpha=float, seed=int)
    for key, f in conv.items():
        cfg[key] = f(cfg[key])
    for key in ("y0", "y1", "epsilon", "h"):
        cfg[key] = None if cfg[key] in (None, "", "None") else float(cfg[key])
    cfg["K"] = None if cfg["K"] in (None, "", "None") else int(cfg["K"])
    cfg["v_star"] = None if cfg["v_star"] is None else float(cfg["v_star"])
    cfg["p"] = _floats(cfg["p"]) if not isinstance(cfg["p"], list) else cfg["p"]
    if cfg["estimator"] not in (SERIES, LOCAL_LINEAR, "discrete"):
        raise UsageError(f"unknown estimator {cfg['estimator']!r}")
    if cfg["side"] not in ("lower", "upper", "both"):
        raise UsageError(f"unknown side {cfg['side']!r}")
    CVMethod(cfg["cv_method"])
    return cfg


def _side_curve(sample: Sample, cfg: dict, side: Side, grid: EvaluationGrid | None):
    est = cfg["estimator"]
    if est == "discrete":
        fit = fit_discrete(sample)
        return discrete_curve(fit, side)
    if est == SERIES:
        K = cfg["K"] or select_K(sample)
        return series_curve(fit_series(sample, K), grid, side)
    fit = fit_kernel(sample, grid, cfg["h"])
    return kernel_curve(fit, sample, grid, side)


def _curve_rows(curve: BoundCurve, aset, k: float) -> list:
    pts = np.asarray(curve.grid.points).reshape(len(curve.grid), -1)
    member = np.zeros(len(curve.grid), dtype=bool)
    member[aset.indices] = True
    sign = 1.0 if curve.side is Side.UPPER else -1.0
    rows = []
    for i in range(len(curve.grid)):
        rows.append([curve.side.value, *[repr(float(x)) for x in pts[i]],
                     repr(float(curve.theta_hat[i])), repr(float(curve.se[i])),
                     repr(float(curve.theta_hat[i] + sign * k * curve.se[i])), int(member[i])])
    return rows


def save_artifact(path, curve: BoundCurve, weights: InfluenceWeights, aset):
    np.savez(path, points=np.asarray(curve.grid.points), domain_lo=curve.grid.domain_lo,
             domain_hi=curve.grid.domain_hi, measure=curve.grid.measure,
             theta_hat=curve.theta_hat, se=curve.se, side=curve.side.value, n=curve.n,
             estimator_kind=curve.estimator_kind.value,
             smoothing=np.nan if curve.smoothing is None else curve.smoothing,
             vectors=weights.vectors, scale=weights.scale, indices=aset.indices)


def load_artifact(path):
    z = np.load(path, allow_pickle=False)
    grid = EvaluationGrid(z["points"], z["domain_lo"], z["domain_hi"], float(z["measure"]))
    sm = float(z["smoothing"])
    curve = BoundCurve(grid, z["theta_hat"], z["se"], Side(str(z["side"])), int(z["n"]),
                       EstimatorKind(str(z["estimator_kind"])), None if np.isnan(sm) else sm)
    weights = InfluenceWeights(z["vectors"], float(z["scale"]))
    return curve, weights, z["indices"]


def run_estimate(args) -> str:
    cfg = _resolve(args)
    raw = read_sample(args.data)
    y0 = cfg["y0"] if cfg["y0"] is not None else float(raw.y.min())
    y1 = cfg["y1"] if cfg["y1"] is not None else float(raw.y.max())
    if y0 > raw.y.min() or y1 < raw.y.max():
        raise DataError(f"support endpoints [{y0}, {y1}] do not cover observed y")
    sides = [Side.LOWER, Side.UPPER] if cfg["side"] == "both" else [Side(cfg["side"])]
    parametric = cfg["estimator"] == "discrete"
    eps = cfg["epsilon"] if cfg["epsilon"] is not None else (0.0 if parametric else 1e-6)
    master = np.random.SeedSequence(cfg["seed"])
    infs = {}
    curve_rows = []
    lines = []
    for j, side in enumerate(sides):
        target = Target.LOWER_BOUND if side is Side.LOWER else Target.UPPER_BOUND
        sample = transform_outcome(raw, TransformSpec(cfg["t"], y0, y1, target, mtr=cfg["mtr"]))
        grid = None
        if not parametric:
            lo, hi = None, None
            if cfg["v_star"] is not None:
                lo, hi = (None, cfg["v_star"]) if side is Side.LOWER else (cfg["v_star"], None)
            grid = build_grid(sample, cfg["grid_points"], cfg["trim_pct"], hi=hi, lo=lo)
        curve, weights = _side_curve(sample, cfg, side, grid)
        if cfg["no_estimate_V"]:
            aset = full_set(curve)
        else:
            aset = estimate_Veps(curve, eps, PARAMETRIC if parametric else NONPARAMETRIC)
        seed = np.random.SeedSequence(master.entropy, spawn_key=(j,))
        inf = BoundInference(curve, weights, aset, CVMethod(cfg["cv_method"]), cfg["R"], seed)
        infs[side] = inf
        pts = np.asarray(curve.grid.points).reshape(len(curve.grid), -1)[aset.indices]
        lines.append(f"[{side.value}] estimator={cfg['estimator']} n={curve.n} "
                     f"smoothing={curve.smoothing} analog={inf.analog():.6f} "
                     f"set=[{pts.min():.6f}, {pts.max():.6f}] set_points={len(aset)} "
                     f"set_measure={set_measure(aset, curve):.6f}")
        k_emit = None
        for p in cfg["p"]:
            res = inf.at(p)
            kv = res.k_used
            if k_emit is None or p == max(cfg["p"]):
                k_emit = kv.k
            extra = "".join(f" {name}={val:.6f}" for name, val in (("a_n", kv.a_n), ("b_n", kv.b_n))
                            if val is not None)
            lines.append(f"[{side.value}] p={p:g} theta_p={res.theta_p:.6f} k={kv.k:.6f} "
                         f"method={kv.method.value}{extra}")
        curve_rows += _curve_rows(curve, aset, k_emit)
        if args.save_artifact:
            stem = Path(args.save_artifact)
            save_artifact(stem.with_name(f"{stem.stem}_{side.value}.npz"), curve, weights, aset)
    if cfg["ci"] != "none":
        if len(infs) != 2:
            raise UsageError("--ci needs --side both")
        alpha = cfg["alpha"]
        if cfg["ci"] == "set":
            p = 1 - alpha / 2
            iv = ci_identified_set(infs[Side.LOWER].at(p), infs[Side.UPPER].at(p))
        else:
            iv = ci_parameter(infs[Side.LOWER], infs[Side.UPPER], alpha, cfg["tau_rule"])
        extra = "" if iv.p_hat_n is None else (f" p_hat={iv.p_hat_n:.6f} delta_hat={iv.delta_hat:.6f}"
                                                f" tau={iv.tau_n:.6f}")
        lines.append(f"[ci] kind={iv.kind} level={iv.level:g} lo={iv.lo:.6f} hi={iv.hi:.6f}"
                     f"{extra}{' EMPTY (bounds cross)' if iv.crossed else ''}")
    if args.emit_curve:
        d = raw.d
        vcols = ["v"] if d == 1 else [f"v{i + 1}" for i in range(d)]
        with open(args.emit_curve, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["side", *vcols, "theta_hat", "se", "corrected", "in_Veps"])
            w.writerows(curve_rows)
    out = "\n".join(lines) + "\n"
    if args.out:
        od = Path(args.out)
        od.mkdir(parents=True, exist_ok=True)
        (od / "results.txt").write_text(out)
        _write_manifest(od, "estimate", cfg, extra={"data": str(args.data)})
    return out


def _write_manifest(outdir: Path, command: str, cfg: dict, extra=None):
    body = {"command": command, "version": __version__, "config": cfg}
    body.update(extra or {})
    (outdir / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True, default=str))


# --- mc ---------------------------------------------------------------------------

def run_mc(args) -> str:
    if args.manifest:
        cfgs = [McConfig(**{**c, "p_list": tuple(c["p_list"])})
                for c in json.loads(Path(args.manifest).read_text())["config"]]
    elif args.table1:
        cfgs = [McConfig(dgp=dgp, n=n, estimator=est, estimate_V=ev, reps=args.reps,
                         seed=args.seed, R=args.R, workers=args.workers)
                for est, dgp, n, ev in TABLE1_CONFIGS]
    else:
        if args.dgp not in (1, 2):
            raise UsageError(f"invalid dgp {args.dgp}; expected 1 or 2")
        evs = {"yes": [True], "no": [False], "both": [False, True]}[args.estimate_V]
        cfgs = [McConfig(dgp=args.dgp, n=args.n, estimator=args.estimator, estimate_V=ev,
                         reps=args.reps, seed=args.seed, R=args.R, workers=args.workers)
                for ev in evs]
    if args.workers and not args.manifest:
        cfgs = [replace(c, workers=args.workers) for c in cfgs]
    results = []
    for c in cfgs:
        log.info("running %s dgp=%d n=%d estimate_V=%s reps=%d", c.estimator, c.dgp, c.n,
                 c.estimate_V, c.reps)
        results.append(run_experiment(c))
    table = to_table(results)
    if args.out:
        od = Path(args.out)
        od.mkdir(parents=True, exist_ok=True)
        (od / "metrics.csv").write_text(to_csv(results))
        (od / "table.txt").write_text(table + "\n")
        _write_manifest(od, "mc", [config_dict(c) for c in cfgs])
    return table + "\n"


# --- cv ---------------------------------------------------------------------------

def _fixture(name: str):
    """Small built-in curves for diagnostics."""
    if name == "singleton":
        grid = EvaluationGrid(np.array([0.0]), 0.0, 1.0, 1.0)
        curve = BoundCurve(grid, [0.0], [1.0], Side.UPPER, 100, EstimatorKind.DISCRETE)
        return curve, InfluenceWeights(np.array([[10.0]]), 10.0), np.array([0])
    if name == "kernel":
        from .montecarlo import DgpSpec, dgp_sample, Y0
        raw = dgp_sample(DgpSpec(1, 500), 1)
        s = transform_outcome(raw, TransformSpec(1.0, Y0, -Y0))
        grid = build_grid(s, 200, 5.0, hi=1.5)
        fit = fit_kernel(s, grid)
        curve, w = kernel_curve(fit, s, grid, Side.LOWER)
        return curve, w, np.arange(len(grid))
    raise UsageError(f"unknown fixture {name!r}; expected 'singleton' or 'kernel'")


def run_cv(args) -> str:
    if args.artifact:
        if not Path(args.artifact).exists():
            raise DataError(f"artifact not found: {args.artifact}")
        curve, weights, idx = load_artifact(args.artifact)
    elif args.fixture:
        curve, weights, idx = _fixture(args.fixture)
    else:
        raise UsageError("give an artifact path or --fixture")
    from .data import ArgminSet
    aset = ArgminSet(idx, np.nan, 0.0, 0.0, 0.0)
    methods = [CVMethod.SIMULATED]
    if curve.estimator_kind is EstimatorKind.SERIES:
        methods.append(CVMethod.SERIES_EXPONENTIAL)
    if curve.estimator_kind is EstimatorKind.LOCAL_LINEAR:
        methods += [CVMethod.KERNEL_GUMBEL, CVMethod.KERNEL_GUMBEL_APPROX,
                    CVMethod.KERNEL_HARDLE_LINTON]
    ps = _floats(args.p)
    table = {m: BoundInference(curve, weights, aset, m, args.R, args.seed) for m in methods}
    header = ["p"] + [m.value for m in methods]
    lines = ["  ".join(f"{h:>22}" for h in header)]
    for p in ps:
        cells = [f"{p:>22g}"] + [f"{table[m].critical_value(p).k:>22.6f}" for m in methods]
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


# --- wiring -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="intbounds", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("estimate", help="estimate bounds and intervals from a y,z,v CSV")
    e.add_argument("data")
    e.add_argument("--config", help="key=value configuration file")
    e.add_argument("--manifest", help="re-run with the config stored in a manifest.json")
    e.add_argument("--estimator", choices=[SERIES, LOCAL_LINEAR, "discrete"])
    e.add_argument("--side", choices=["lower", "upper", "both"])
    e.add_argument("--t", type=float, help="treatment value")
    e.add_argument("--y0", type=float, help="left support endpoint (default: min y)")
    e.add_argument("--y1", type=float, help="right support endpoint (default: max y)")
    e.add_argument("--mtr", action="store_true", default=None, help="use 1{t>=z} / 1{t<=z} indicators")
    e.add_argument("--v-star", type=float, dest="v_star",
                   help="MIV point: lower bound over v<=v*, upper bound over v>=v*")
    e.add_argument("--grid-points", type=int, dest="grid_points")
    e.add_argument("--trim-pct", type=float, dest="trim_pct")
    e.add_argument("--epsilon", type=float)
    e.add_argument("--no-estimate-V", action="store_true", default=None, dest="no_estimate_V")
    e.add_argument("--cv-method", dest="cv_method", choices=[m.value for m in CVMethod])
    e.add_argument("--R", type=int)
    e.add_argument("--alpha", type=float)
    e.add_argument("--p", help="comma-separated levels, e.g. 0.5,0.95")
    e.add_argument("--tau-rule", dest="tau_rule", choices=["sigma", "logn"])
    e.add_argument("--seed", type=int)
    e.add_argument("--K", type=int, help="series terms (default: cross-validated rule)")
    e.add_argument("--h", type=float, help="bandwidth (default: rule of thumb)")
    e.add_argument("--ci", choices=["none", "set", "parameter"])
    e.add_argument("--emit-curve", dest="emit_curve", help="write per-grid-point curve CSV")
    e.add_argument("--save-artifact", dest="save_artifact",
                   help="write curve/weights .npz files for the cv command")
    e.add_argument("--out", help="directory for results.txt and manifest.json")

    m = sub.add_parser("mc", help="run the simulation study")
    m.add_argument("--dgp", type=int, default=1)
    m.add_argument("--n", type=int, default=500)
    m.add_argument("--estimator", choices=[SERIES, LOCAL_LINEAR], default=SERIES)
    m.add_argument("--estimate-V", dest="estimate_V", choices=["yes", "no", "both"], default="both")
    m.add_argument("--reps", type=int, default=1000)
    m.add_argument("--seed", type=int, default=McConfig.seed)
    m.add_argument("--R", type=int, default=critical.DEFAULT_R)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--table1", action="store_true", help="all 16 configurations")
    m.add_argument("--manifest", help="re-run the configurations stored in a manifest.json")
    m.add_argument("--out", help="directory for metrics.csv, table.txt, manifest.json")

    c = sub.add_parser("cv", help="report critical values across methods")
    c.add_argument("artifact", nargs="?", help=".npz written by estimate --save-artifact")
    c.add_argument("--fixture", help="built-in fixture: singleton | kernel")
    c.add_argument("--p", default="0.5,0.9,0.95,0.99")
    c.add_argument("--R", type=int, default=critical.DEFAULT_R)
    c.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    runner = {"estimate": run_estimate, "mc": run_mc, "cv": run_cv}[args.command]
    try:
        sys.stdout.write(runner(args))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:  # DataError subclasses ValueError
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, ExperimentAborted, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
