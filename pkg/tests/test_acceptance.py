"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

The lines are collected by ``conftest.py`` and shown in the terminal summary.
Criteria 1 to 4 run the full simulation study and take a few minutes.
"""
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from intbounds import critical
from intbounds.argmin import estimate_Veps, full_set
from intbounds.data import EvaluationGrid, InfluenceWeights, Sample, Side
from intbounds.inference import BoundInference, ci_parameter, p_hat
from intbounds.kernel import K_SQUARED_INTEGRAL, KERNEL_LAMBDA, K_ZERO, local_linear_at, quartic
from intbounds.montecarlo import LOCAL_LINEAR, SERIES, TABLE1_CONFIGS, McConfig, run_experiment
from intbounds.series import SplineBasisSpec, bspline_basis, fit_series, series_curve

from conftest import miv_sample

_cache = {}


def experiment(**kw):
    key = tuple(sorted(kw.items()))
    if key not in _cache:
        _cache[key] = run_experiment(McConfig(**kw))
    return _cache[key]


def within(x, target, tol):
    return abs(x - target) <= tol


@pytest.mark.slow
def test_c1_series_dgp1(record_acceptance):
    m = experiment(dgp=1, n=500, estimator=SERIES, estimate_V=False, reps=1000)
    checks = [
        record_acceptance("C1 series DGP1 n=500: New mean bias 0.007 +- 0.02",
                          within(m.new.mean_bias, 0.007, 0.02), f"got {m.new.mean_bias:.4f}"),
        record_acceptance("C1 series DGP1 n=500: New cov95 0.958 +- 0.02",
                          within(m.new.coverage[0.95], 0.958, 0.02),
                          f"got {m.new.coverage[0.95]:.3f}"),
        record_acceptance("C1 series DGP1 n=500: Analog mean bias 0.255 +- 0.03",
                          within(m.analog.mean_bias, 0.255, 0.03), f"got {m.analog.mean_bias:.4f}"),
    ]
    assert all(checks)


@pytest.mark.slow
def test_c2_local_linear_dgp1(record_acceptance):
    m = experiment(dgp=1, n=500, estimator=LOCAL_LINEAR, estimate_V=False, reps=1000)
    checks = [
        record_acceptance("C2 local linear DGP1 n=500: Analog mean bias 0.208 +- 0.03",
                          within(m.analog.mean_bias, 0.208, 0.03), f"got {m.analog.mean_bias:.4f}"),
        record_acceptance("C2 local linear DGP1 n=500: New mean bias 0.012 +- 0.02",
                          within(m.new.mean_bias, 0.012, 0.02), f"got {m.new.mean_bias:.4f}"),
        record_acceptance("C2 local linear DGP1 n=500: New cov95 0.943 +- 0.02",
                          within(m.new.coverage[0.95], 0.943, 0.02),
                          f"got {m.new.coverage[0.95]:.3f}"),
        record_acceptance("C2 local linear DGP1 n=500: average h 0.584 +- 0.05",
                          within(m.avg_smoothing, 0.584, 0.05), f"got {m.avg_smoothing:.4f}"),
    ]
    assert all(checks)


@pytest.mark.slow
def test_c3_series_dgp2_rmse(record_acceptance):
    m = experiment(dgp=2, n=1000, estimator=SERIES, estimate_V=True, reps=1000)
    new, ana = m.new.rmse, m.analog.rmse
    checks = [
        record_acceptance("C3 series DGP2 n=1000 V estimated: New RMSE < Analog RMSE",
                          new < ana, f"got {new:.4f} vs {ana:.4f}"),
        record_acceptance("C3 series DGP2 n=1000: New RMSE 0.189 +- 0.03", within(new, 0.189, 0.03),
                          f"got {new:.4f}"),
        record_acceptance("C3 series DGP2 n=1000: Analog RMSE 0.217 +- 0.03",
                          within(ana, 0.217, 0.03), f"got {ana:.4f}"),
    ]
    assert all(checks)


@pytest.mark.slow
def test_c4_reduced_reps_all_configs(record_acceptance):
    t0 = time.perf_counter()
    covs = {}
    for est, dgp, n, ev in TABLE1_CONFIGS:
        m = run_experiment(McConfig(dgp=dgp, n=n, estimator=est, estimate_V=ev, reps=200))
        covs[(est, dgp, n, ev)] = m.new.coverage[0.95]
    elapsed = time.perf_counter() - t0
    lo, hi = min(covs.values()), max(covs.values())
    checks = [
        record_acceptance("C4 reps=200, 16 configs: every New cov95 in [0.90, 1.00]",
                          len(covs) == 16 and 0.90 <= lo and hi <= 1.00,
                          f"range [{lo:.3f}, {hi:.3f}]"),
        record_acceptance("C4 reps=200, 16 configs: runtime under 10 minutes", elapsed < 600,
                          f"{elapsed:.0f} s"),
    ]
    assert all(checks)


def test_c5_simulation_matches_bruteforce(record_acceptance):
    failures = []
    count = [0]

    @settings(max_examples=20, deadline=None, derandomize=True, database=None)
    @given(st.integers(1, 50), st.integers(1, 8), st.sampled_from([0.5, 0.9, 0.95]),
           st.integers(0, 2 ** 31 - 1))
    def check(m, K, p, seed):
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal((m, K)) + rng.uniform(0, 2) * rng.standard_normal(K)
        w = InfluenceWeights(vec, 1.0)
        sim = critical.simulate_k(w, p, R=20_000, seed=seed)
        a = vec / np.linalg.norm(vec, axis=1, keepdims=True)
        draws = 100_000
        brute = critical.bruteforce_sup_quantile(a @ a.T, p, draws=draws, seed=seed + 1)
        se = sim.mc_se * math.sqrt(1 + 20_000 / draws)
        count[0] += 1
        if abs(sim.k - brute) > 3 * se:
            failures.append((m, K, p, sim.k, brute, se))

    check()
    ok = record_acceptance("C5 simulated k vs brute-force oracle, 20 fixtures <= 50 points",
                           count[0] == 20 and not failures,
                           f"{count[0]} fixtures, {len(failures)} outside 3 MC se")
    assert ok, failures


def test_c6_analytic_constants(record_acceptance):
    k2 = integrate.quad(lambda s: quartic(s) ** 2, -1, 1, epsabs=1e-13)[0]
    k2nd = integrate.quad(lambda s: quartic(s) * (-4 * K_ZERO * (1 - 3 * s * s)), -1, 1,
                          epsabs=1e-13)[0]
    lam = -k2nd / k2
    gumbel_ok = all(abs(critical.gumbel_quantile(p) - (-math.log(-math.log(p)))) <= 1e-12
                    for p in (0.1, 0.5, 0.9, 0.95, 0.99))
    expo_ok = all(abs(critical.exponential_quantile(p) - (-math.log(1 - p))) <= 1e-12
                  for p in (0.1, 0.5, 0.9, 0.95, 0.99))
    checks = [
        record_acceptance("C6 int K^2 = 5/7 within 1e-6", abs(k2 - K_SQUARED_INTEGRAL) < 1e-6,
                          f"quadrature {k2:.10f}"),
        record_acceptance("C6 lambda = 3 within 1e-6", abs(lam - KERNEL_LAMBDA) < 1e-6,
                          f"quadrature {lam:.10f}"),
        record_acceptance("C6 Gumbel and exponential quantiles to 1e-12", gumbel_ok and expo_ok),
    ]
    assert all(checks)


def _curve_and_weights(sample, K=9, side=Side.LOWER):
    grid = EvaluationGrid.linspace(-1.5, 1.5, 80)
    return series_curve(fit_series(sample, K), grid, side)


def test_c7_invariant_suites(record_acceptance):
    rng = np.random.default_rng(7)
    s = miv_sample(2, 600, 5)
    results = {}

    spec = SplineBasisSpec.from_quantiles(s.v1, 14)
    B = bspline_basis(np.linspace(*spec.boundary, 5000), spec)
    results["B-spline partition of unity"] = np.max(np.abs(B.sum(1) - 1)) <= 1e-12

    v = np.sort(rng.uniform(-2, 2, 300))
    x = np.linspace(-1.5, 1.5, 50)
    results["local-linear affine exactness"] = np.allclose(
        local_linear_at(x, v, 1.5 - 2.5 * v, 0.4), 1.5 - 2.5 * x, rtol=0, atol=1e-10)

    fit = fit_series(s, 11)
    P = bspline_basis(s.v1, fit.basis)
    results["OLS normal equations"] = np.max(np.abs(P.T @ fit.residuals)) <= 1e-9 * s.n

    curve, w = _curve_and_weights(s)
    aset = estimate_Veps(curve, 1e-6)
    ks = critical.simulate_ks(w, np.linspace(0.01, 0.99, 50), R=5000, seed=1, indices=aset.indices)
    results["k monotone in p"] = bool(np.all(np.diff([ks[p].k for p in sorted(ks)]) >= 0))

    sets = [estimate_Veps(curve, e) for e in (0.0, 0.05, 0.2, 1.0)]
    nested = all(set(a.indices) <= set(b.indices) for a, b in zip(sets, sets[1:]))
    opt = int(np.argmax(curve.theta_hat))
    results["V_eps monotone in eps and contains the optimizer"] = nested and opt in sets[0].indices

    ph = [p_hat(d, t, a) for d in (-1, 0, 0.01, 1, 100) for t in (0, 0.5, 10) for a in (0.01, 0.05, 0.5)]
    alphas = [a for _ in (-1, 0, 0.01, 1, 100) for _ in (0, 0.5, 10) for a in (0.01, 0.05, 0.5)]
    lo_inf = BoundInference(curve, w, aset, seed=3)
    up = curve.with_side(Side.UPPER)
    up_inf = BoundInference(up, w, estimate_Veps(up, 1e-6), seed=4)
    ci = ci_parameter(lo_inf, up_inf, 0.05)
    results["p_hat in [1-alpha, 1-alpha/2]"] = (
        all(1 - a <= q <= 1 - a / 2 for q, a in zip(ph, alphas)) and 0.95 <= ci.p_hat_n <= 0.975)

    c2, w2 = _curve_and_weights(s.with_y(3.0 * s.y + 2.0))
    shifted = BoundInference(c2, w2, estimate_Veps(c2, 1e-6), seed=3)
    results["location/scale equivariance"] = (
        np.allclose(c2.theta_hat, 3 * curve.theta_hat + 2, atol=1e-9)
        and np.allclose(c2.se, 3 * curve.se, rtol=1e-8)
        and abs(shifted.at(0.9).theta_p - (3 * lo_inf.at(0.9).theta_p + 2)) < 1e-8)

    base = dict(dgp=2, n=300, estimator=SERIES, estimate_V=True, reps=8, R=2000, seed=5)
    a = run_experiment(McConfig(**base, workers=1))
    b = run_experiment(McConfig(**base, workers=3))
    results["bit-reproducibility across worker counts"] = (
        (a.new, a.analog, a.avg_smoothing, a.avg_set) == (b.new, b.analog, b.avg_smoothing, b.avg_set))

    for name, ok in results.items():
        record_acceptance(f"C7 invariant: {name}", bool(ok))
    assert all(results.values()), {k: v for k, v in results.items() if not v}


def test_c8_series_majorant(record_acceptance):
    rows = []
    for dgp, seed, K in [(d, sd, K) for d in (1, 2) for sd in range(5) for K in (10, 16)]:
        if len(rows) == 10:
            break
        s = miv_sample(dgp, 1000, 100 + seed)
        lo = float(np.percentile(s.v1, 5))
        grid = EvaluationGrid.linspace(lo, 1.5, 200)
        curve, w = series_curve(fit_series(s, K), grid)
        aset = full_set(curve)
        if critical.series_kappa(w, aset, grid.cell_volume) <= 2 * math.pi:
            continue
        ana = critical.analytic_series_k(w, aset, grid.cell_volume, 0.95)
        sim = critical.simulate_k(w, 0.95, R=20_000, seed=seed)
        rows.append((ana.k, sim.k, sim.mc_se))
    bad = [r for r in rows if r[0] < r[1] - 3 * r[2]]
    ok = record_acceptance("C8 series exponential k(0.95) >= simulated k(0.95) - 3 MC se, 10 fixtures",
                           len(rows) == 10 and not bad,
                           f"{len(rows)} fixtures, min margin "
                           f"{min(r[0] - r[1] for r in rows):.3f}" if rows else "no fixtures")
    assert ok, bad
