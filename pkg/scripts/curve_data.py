"""Curve data for one simulated sample: estimate, corrected curves and the set.

    python scripts/curve_data.py --dgp 2 --n 1000 --estimator series --out curve.csv

Columns: v, true, theta_hat, se, corrected_50, corrected_95, in_set. Enough to
redraw the usual picture of the analog curve against its corrected versions.
"""
import argparse
import csv

import numpy as np

from intbounds.argmin import estimate_Veps
from intbounds.data import EvaluationGrid, Target, TransformSpec, transform_outcome
from intbounds.inference import BoundInference
from intbounds.montecarlo import V_STAR, Y0, DgpSpec, dgp_sample, fit_curve, true_theta_l


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dgp", type=int, default=2)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--estimator", default="series", choices=["series", "local-linear"])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="curve.csv")
    args = ap.parse_args()

    spec = DgpSpec(args.dgp, args.n)
    sample = transform_outcome(dgp_sample(spec, args.seed),
                               TransformSpec(1.0, Y0, -Y0, Target.LOWER_BOUND))
    grid = EvaluationGrid.linspace(float(np.percentile(sample.v1, 5)), V_STAR, 200)
    curve, weights = fit_curve(sample, grid, args.estimator)
    aset = estimate_Veps(curve, 1e-6)
    inf = BoundInference(curve, weights, aset, seed=args.seed)
    k50, k95 = inf.critical_value(0.5).k, inf.critical_value(0.95).k
    member = np.zeros(len(grid), dtype=int)
    member[aset.indices] = 1
    v = np.asarray(grid.points)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["v", "true", "theta_hat", "se", "corrected_50", "corrected_95", "in_set"])
        for row in zip(v, true_theta_l(spec, v), curve.theta_hat, curve.se,
                       curve.theta_hat - k50 * curve.se, curve.theta_hat - k95 * curve.se, member):
            w.writerow([f"{x:.6f}" for x in row[:-1]] + [row[-1]])
    print(f"analog {inf.analog():.4f}  theta_0.5 {inf.at(0.5).theta_p:.4f}  "
          f"theta_0.95 {inf.at(0.95).theta_p:.4f}  set points {len(aset)}  -> {args.out}")


if __name__ == "__main__":
    main()
