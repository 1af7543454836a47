"""End-to-end acceptance checks.

Each check prints one ``criterion k: PASS|FAIL ...`` line and records it for
the summary section of the pytest report. Run this file directly to print
all nine lines without pytest.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

sys.path.insert(0, str(Path(__file__).parent))

import conftest  # noqa: E402
from helpers import random_sampled_model, random_spec, random_state_space  # noqa: E402
from levycarma import (  # noqa: E402
    NIG,
    CarmaSpec,
    CompoundPoissonJumps,
    Gamma,
    PoissonJumps,
    Sum,
    Triplet,
    autocov,
    brownian,
    char_exponent,
    companion,
    moment_rates,
    sample_increments,
    sampled_ar_coefficients,
    simulate_gaussian,
    spectral_density,
    stationary_cf,
    stationary_cov,
    verify_equivalence,
)
from levycarma.experiments import Table1Config, Table2Config, gamma_ks_distance, run_table1, run_table2  # noqa: E402
from levycarma.linalg import expm  # noqa: E402
from levycarma.qml import BIVARIATE_TRUTH, FitSettings, fit, univariate_canonical  # noqa: E402

pytestmark = pytest.mark.acceptance


def _report(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


# 1: Lyapunov solution against quadrature of the stationary-covariance integral


def criterion_1():
    rng = np.random.default_rng(101)
    worst, t_solve = 0.0, 0.0
    t0 = time.perf_counter()
    for _ in range(50):
        ss = random_state_space(rng, int(rng.integers(1, 9)))
        s0 = time.perf_counter()
        v = stationary_cov(ss)
        t_solve += time.perf_counter() - s0
        q = ss.B @ ss.sigma_l @ ss.B.T
        ref, _ = integrate.quad_vec(lambda u: expm(ss.A * u) @ q @ expm(ss.A.T * u), 0, np.inf,
                                    epsabs=0.0, epsrel=1e-12)
        worst = max(worst, np.linalg.norm(v - ref) / np.linalg.norm(ref))
    total = time.perf_counter() - t0
    ok = worst < 1e-8 and total < 10.0
    return _report(1, ok, f"max rel Frobenius error {worst:.2e} (tol 1e-8); "
                          f"solver {t_solve:.3f} s, total with quadrature {total:.2f} s (limit 10 s)")


# 2: the spectral density integrates to the lag-zero autocovariance


def criterion_2():
    rng = np.random.default_rng(202)
    worst = 0.0
    t0 = time.perf_counter()
    for k in range(20):
        spec = random_spec(rng, d=1 + k % 2, p=int(rng.integers(1, 4)))
        ss = companion(spec, np.eye(spec.m))
        # f(-w) = f(w)^T, so the integral over the line is twice the real part over the half-line
        val, _ = integrate.quad_vec(lambda w: spectral_density(ss, w).real, 0, np.inf,
                                    epsabs=1e-12, epsrel=1e-11)
        worst = max(worst, np.abs(2 * val - autocov(ss, 0.0)).max())
    total = time.perf_counter() - t0
    ok = worst < 1e-6 and total < 30.0
    return _report(2, ok, f"max |int f - c(0)| {worst:.2e} (tol 1e-6); {total:.2f} s (limit 30 s)")


# 3: sampled autocovariances satisfy the AR recursion beyond lag N


def criterion_3():
    rng = np.random.default_rng(303)
    h = 1.0
    worst = 0.0
    for _ in range(20):
        ss = random_sampled_model(rng, h)
        phi = sampled_ar_coefficients(ss, h)
        n = ss.N
        gam = [autocov(ss, j * h) for j in range(n + 11)]
        scale = np.abs(gam[0]).max()
        for lag in range(n, n + 11):
            r = gam[lag] - sum(phi[j - 1] * gam[lag - j] for j in range(1, n + 1))
            worst = max(worst, np.abs(r).max() / scale)
    ok = worst < 1e-8
    return _report(3, ok, f"max relative residual {worst:.2e} over lags N..N+10 (tol 1e-8)")


# 4: Gaussian OU estimator centring and standard-error calibration


def criterion_4():
    ou = companion(CarmaSpec.univariate([0.6], [1.0]), [[1.0]])
    par = univariate_canonical(1, 0)
    truth = np.array([-0.6, 1.0])
    est, sds = [], []
    t0 = time.perf_counter()
    for r in range(50):
        path = simulate_gaussian(ou, 1.0, 2000, seed=4000, stream=r)
        res = fit(par, path, truth, FitSettings(n_starts=1))
        est.append(res.theta_hat[0])
        sds.append(res.stderr[0])
    total = time.perf_counter() - t0
    bias = abs(np.mean(est) + 0.6)
    ratio = np.std(est, ddof=1) / np.mean(sds)
    ok = bias < 0.02 and abs(ratio - 1) < 0.3 and total < 120
    return _report(4, ok, f"|mean(a) + 0.6| = {bias:.4f} (tol 0.02); sd/mean(se) = {ratio:.3f} "
                          f"(within 30%); {total:.1f} s (limit 120 s)")


# 5: bivariate NIG-driven study at reduced scale

TABLE1_SD = np.array([0.0354, 0.0479, 0.1276, 0.1009, 0.1587, 0.1285, 0.0987])


def criterion_5():
    t0 = time.perf_counter()
    res = run_table1(Table1Config(replications=25, horizon=2000, h=1.0))
    total = time.perf_counter() - t0
    rows = res["summary"]
    truth = np.asarray(BIVARIATE_TRUTH)
    means = np.array([r["mean"] for r in rows])
    failed = sum("error" in r for r in res["replications"])
    dev = np.abs(means[:7] - truth[:7]) / TABLE1_SD
    sig_ok = np.all(np.sign(means[7:]) == np.sign(truth[7:])) and np.all(np.abs(means[7:] - truth[7:]) < 0.1)
    ok = bool(np.all(dev < 3) and sig_ok and failed == 0)
    return _report(5, ok, f"max |mean - truth| / sd over theta1..7 = {dev.max():.2f} (tol 3); "
                          f"Sigma_L means {np.round(means[7:], 4).tolist()} sign/0.1 check "
                          f"{'ok' if sig_ok else 'failed'}; {failed} failed fits; {total:.0f} s")


# 6: Gamma parameter recovery from Gamma-driven OU paths


def criterion_6():
    t0 = time.perf_counter()
    res = run_table2(Table2Config(paths=10, horizon=5000, h_fines=(0.01,)))
    total = time.perf_counter() - t0
    row = res["summary"][0]
    est_ok = 1.954 <= row["mean"] <= 2.054 and row["sd"] < 0.08 and total < 300
    # pooled histogram diagnostic: 100 paths of 5000 unit increments
    pooled = run_table2(Table2Config(paths=100, horizon=5000, h_fines=(0.01,), keep_increments=True))
    values = np.concatenate([r["rows"][0]["increments"] for r in pooled["replications"]])
    ks = gamma_ks_distance(values, 2.0, 1.0)
    ok = est_ok and ks < 0.02 and values.size == 500_000
    return _report(6, ok, f"mean {row['mean']:.4f} in [1.954, 2.054], sd {row['sd']:.4f} (< 0.08), "
                          f"{total:.1f} s (limit 300 s); KS distance {ks:.4f} on {values.size} "
                          f"increments (tol 0.02)")


# 7: driver moments and characteristic functions against Monte Carlo

FAMILIES = {
    "brownian+poisson": Triplet([0.3], [[0.5]], PoissonJumps(1.5, [0.8])),
    "compound-normal": Triplet([0.1, -0.2], [[1.0, 0.3], [0.3, 2.0]],
                               CompoundPoissonJumps(0.7, "normal", {"mean": [0.5, 0.0],
                                                                    "cov": [[1.0, 0.2], [0.2, 0.5]]})),
    "compound-exponential": Triplet([0.0], [[0.0]], CompoundPoissonJumps(2.0, "exponential", {"scale": 0.5})),
    "gamma": Gamma(2.0),
    "nig": NIG(1.0, 1.5, [0.4], [[1.0]]),
    "nig-bivariate": NIG(1.0, 2.0, [0.5, -0.3], [[1.0, 0.2], [0.2, 0.7]]),
    "sum": Sum((brownian([[0.4]]), Gamma(1.5))),
}


def _mc_check(model, h, n, seed):
    x = sample_increments(model, h, n, seed=seed).values
    m, v = moment_rates(model)
    worst = 0.0
    se_mean = x.std(axis=0, ddof=1) / np.sqrt(n)
    worst = max(worst, np.max(np.abs(x.mean(axis=0) - m * h) / se_mean))
    xc = x - x.mean(axis=0)
    for i in range(model.dim):
        for j in range(i, model.dim):
            prod = xc[:, i] * xc[:, j]
            worst = max(worst, abs(prod.mean() - v[i, j] * h) / (prod.std(ddof=1) / np.sqrt(n)))
    rng = np.random.default_rng(seed + 1)
    cf_worst = 0.0
    for u in rng.uniform(-2.0, 2.0, size=(10, model.dim)):
        emp = np.mean(np.exp(1j * x @ u))
        cf_worst = max(cf_worst, abs(emp - np.exp(h * char_exponent(model, u))) * np.sqrt(n))
    return worst, cf_worst


def criterion_7():
    n = 100_000
    parts, ok = [], True
    for k, (name, model) in enumerate(FAMILIES.items()):
        mz, cz = _mc_check(model, 0.7, n, 700 + k)
        ok = ok and mz < 5 and cz < 5
        parts.append(f"{name} {mz:.1f}/{cz:.1f}")
    return _report(7, ok, "max moment z / CF error * sqrt(n) (tol 5/5): " + ", ".join(parts))


# 8: stationary characteristic function of a compound-Poisson-driven OU


def _exact_stationary_draws(n, rng, horizon=40.0):
    # X = sum_k exp(-T_k) over the arrival times T_k of a unit-rate Poisson process
    x = np.zeros(n)
    t = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    while alive.any():
        t[alive] += rng.exponential(1.0, alive.sum())
        alive &= t < horizon
        x[alive] += np.exp(-t[alive])
    return x


def criterion_8():
    ss = companion(CarmaSpec.univariate([1.0], [1.0]), [[1.0]])
    driver = Triplet([0.0], [[0.0]], PoissonJumps(1.0, [1.0]))
    us = np.array([-3.0, -2.0, -1.0, -0.5, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0])
    cf = np.array([stationary_cf(ss, driver, [u]) for u in us])
    # exact series representation of the stationary law
    x = _exact_stationary_draws(1_000_000, np.random.default_rng(808))
    exact_err = max(abs(np.mean(np.exp(1j * u * x)) - c) for u, c in zip(us, cf))
    # the simulator's own stationary samples, spaced 4 time units apart
    from levycarma import simulate_levy

    path = simulate_levy(ss, driver, 4.0, 200_000, substeps=64, seed=809)
    y = path.y[1:, 0]
    sim_err = max(abs(np.mean(np.exp(1j * u * y)) - c) for u, c in zip(us, cf))
    ok = exact_err < 5e-3 and sim_err < 5e-3
    return _report(8, ok, f"max |CF quad - MC| {exact_err:.2e} (exact draws, n=1e6), "
                          f"{sim_err:.2e} (simulated path, n=2e5); tol 5e-3")


# 9: companion realisation reproduces the transfer function


def criterion_9():
    rng = np.random.default_rng(909)
    worst = max(verify_equivalence(companion(s), s) for s in (random_spec(rng) for _ in range(100)))
    return _report(9, worst < 1e-8, f"max transfer-function discrepancy {worst:.2e} over 100 specs (tol 1e-8)")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


def test_criterion_1_lyapunov_vs_quadrature():
    assert criterion_1()


def test_criterion_2_spectral_inversion():
    assert criterion_2()


def test_criterion_3_sampled_ar_identity():
    assert criterion_3()


def test_criterion_4_gaussian_ou_calibration():
    assert criterion_4()


@pytest.mark.slow
def test_criterion_5_bivariate_nig_study():
    assert criterion_5()


@pytest.mark.slow
def test_criterion_6_gamma_recovery_study():
    assert criterion_6()


def test_criterion_7_driver_moments_and_cf():
    assert criterion_7()


def test_criterion_8_stationary_cf_vs_monte_carlo():
    assert criterion_8()


def test_criterion_9_companion_equivalence():
    assert criterion_9()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
