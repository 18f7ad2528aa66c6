"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (printed in the terminal summary) and
then asserts the same verdict at the stated tolerance.
"""

import csv
import math
import time

import numpy as np
import pytest

from lmdeconv.bench import ExperimentPlan, resolve_rho, run_experiment, monte_carlo_risk
from lmdeconv.cli import main
from lmdeconv.estimator import (
    EstimatorParams, beta_tilde, calibrate_rho, dft_profiles, estimate, threshold,
)
from lmdeconv.longmem import Generator, NoiseSpec, certify_a1
from lmdeconv.model import (
    KernelSpec, builtin_test_functions, get_test_function, kernel_fourier, simulate,
)
from lmdeconv.wavelets import (
    SCALING, WaveletIndex, analyze_2d, daubechies_eval, meyer_eval, meyer_fourier_coeff,
    synthesize_2d,
)

from helpers import noise_coefficients
from oracles import beta_tilde_ref, daub_basis_ref

NU1 = KernelSpec(1.0)


def test_criterion_01_basis_correctness(acceptance, meyer, daub):
    start = time.perf_counter()
    N = M = 256
    time_funcs = [np.ones(N)] + [meyer_eval(meyer, j, k, N) for j in range(7) for k in range(2 ** j)]
    T = np.array(time_funcs)
    meyer_err = np.abs(T @ T.T / N - np.eye(len(T))).max()
    space_funcs = [daubechies_eval(daub, SCALING, 0, M)]
    space_funcs += [daubechies_eval(daub, j, k, M) for j in range(7) for k in range(2 ** j)]
    S = np.array(space_funcs)
    daub_err = np.abs(S @ S.T / M - np.eye(len(S))).max()
    worst = 0.0
    for j in range(9):
        m = np.arange(-2 ** (j + 3), 2 ** (j + 3) + 1)
        for k in range(2 ** j):
            worst = max(worst, np.abs(meyer_fourier_coeff(meyer, j, k, m)).max() * 2 ** (j / 2))
    elapsed = time.perf_counter() - start
    ok = meyer_err <= 1e-8 and daub_err <= 1e-8 and worst <= 1 + 1e-12 and elapsed < 30
    assert acceptance(1, ok, f"Gram errors meyer={meyer_err:.1e} daub={daub_err:.1e}; "
                             f"max |psi| 2^(j/2) = {worst:.6f}; {elapsed:.1f}s")


def test_criterion_02_noiseless_exactness(acceptance, meyer, daub):
    start = time.perf_counter()
    N, M = 256, 16
    identity = KernelSpec(0.0)
    noise = NoiseSpec.homogeneous(0.0, 1.0, M, Generator.IID)
    risks = {}
    for f in builtin_test_functions():
        params = EstimatorParams.build(M, N, 0.0, noise.alphas, 0.0, 0.0)
        f_hat, _ = estimate(simulate(f, identity, noise, N, M), identity, params)
        proj = synthesize_2d(analyze_2d(f.sample(N, M), meyer, daub, params.J1, params.J2),
                             N, M, meyer, daub)
        risks[f.name] = float(np.mean((f_hat - proj) ** 2))
    elapsed = time.perf_counter() - start
    ok = max(risks.values()) <= 1e-10 and elapsed < 10
    assert acceptance(2, ok, f"max risk vs projection {max(risks.values()):.1e} over "
                             f"{sorted(risks)}; {elapsed:.1f}s")


def test_criterion_03_a1_certification(acceptance):
    start = time.perf_counter()
    ladder = [64, 128, 256, 512, 1024, 2048, 4096]
    spread, doubling = {}, {}
    for alpha in (0.2, 0.4, 0.6, 0.8):
        certs = certify_a1(NoiseSpec.homogeneous(1.0, alpha, 1), 0, ladder)
        spread[alpha] = max(c.c2_hat for c in certs) / min(c.c1_hat for c in certs)
        doubling[alpha] = certs[-1].lambda_max / certs[-2].lambda_max / 2 ** (1 - alpha)
    elapsed = time.perf_counter() - start
    spread_ok = all(v <= 10 for v in spread.values())
    doubling_ok = all(abs(v - 1) <= 0.1 for v in doubling.values())
    ok = spread_ok and doubling_ok and elapsed < 120
    detail = ", ".join(f"a={a}: c2/c1={spread[a]:.3g} dbl={doubling[a]:.3f}" for a in spread)
    assert acceptance(3, ok, f"{detail}; {elapsed:.1f}s")


def test_criterion_04_variance_scaling(acceptance):
    start = time.perf_counter()
    alpha, M, J2 = 0.6, 8, 2
    cells = [(2 ** j + 1, 2) for j in (3, 4, 5)]
    var = {}
    for N in (512, 1024, 2048):
        c = noise_coefficients(NU1, "fgn", alpha, N, M, 6, J2, cells, 10_000, seed=400 + N)
        var[N] = np.var(c, axis=0)
    n_slope = np.polyfit(np.log2([512, 1024, 2048]), np.log2([var[n][0] for n in (512, 1024, 2048)]), 1)[0]
    j_slope = np.polyfit([3, 4, 5], np.log2(var[2048]), 1)[0]
    elapsed = time.perf_counter() - start
    ok = abs(n_slope + alpha) <= 0.1 and abs(j_slope - 2.0) <= 0.15 * 2.0 and elapsed < 300
    assert acceptance(4, ok, f"log2 N slope {n_slope:.3f} (target {-alpha}), "
                             f"j1 slope {j_slope:.3f} (target 2 +/- 0.3); {elapsed:.1f}s")


def test_criterion_05_tail_control(acceptance):
    start = time.perf_counter()
    N, M, R = 256, 16, 100_000
    noise = NoiseSpec.homogeneous(1.0, 1.0, M, Generator.IID)
    rho = calibrate_rho(NU1, noise).rho_min
    params = EstimatorParams.build(M, N, 1.0, noise.alphas, 1.0, rho)
    finest = params.J1 - 1
    lam = threshold(finest, M, N, params)
    cells = [(r, c) for r in range(2 ** finest, 2 ** (finest + 1)) for c in range(2 ** params.J2)]
    coeffs = noise_coefficients(NU1, "iid", 1.0, N, M, params.J1, params.J2, cells, R, seed=5)
    freq = (np.abs(coeffs) > lam).mean(axis=0)
    elapsed = time.perf_counter() - start
    bound = 5 / (M * N)
    ok = freq.max() <= bound and elapsed < 300
    assert acceptance(5, ok, f"level j1={finest}, lambda={lam:.4f}, max exceedance "
                             f"{freq.max():.2e} over {len(cells)} coefficients "
                             f"(bound {bound:.2e}); {elapsed:.1f}s")


def test_criterion_06_rate_reproduction(acceptance):
    start = time.perf_counter()
    plan = ExperimentPlan(function="TIMEROUGH", nu=1.0, sigma=0.05, generator="iid",
                          ladder=[(8, 64), (8, 256), (16, 512), (32, 1024), (64, 2048)],
                          replicates=50, rho="auto", log_deflate=True, seed=6)
    report = run_experiment(plan)
    elapsed = time.perf_counter() - start
    span = (64 * 2048) / (8 * 64)
    target = 2 * 2.0 / (2 * 2.0 + 2 + 1)
    ok = (abs(report.fitted_slope - target) <= 0.15 * target and span >= 64
          and report.regime.value == "dense_time" and elapsed < 1800)
    assert acceptance(6, ok, f"fitted {report.fitted_slope:.4f} +/- {report.slope_stderr:.4f} "
                             f"vs 4/7 = {target:.4f} (span {span:.0f}x); {elapsed:.1f}s")


def test_criterion_07_lm_deterioration(acceptance):
    rows = []
    for alpha in (1.0, 0.6, 0.3):
        plan = ExperimentPlan(function="TIMEROUGH", nu=1.0, sigma=0.05, generator="fgn",
                              alpha=alpha, ladder=[(32, 1024)], replicates=50, seed=7)
        M, N, a, risk, se = run_experiment(plan).ladder[0]
        rows.append((alpha, risk, se))
    gaps = [(b[1] - a[1]) / math.hypot(a[2], b[2]) for a, b in zip(rows, rows[1:])]
    ok = all(g > 2 for g in gaps)
    detail = ", ".join(f"a={a}: {r:.4g} (se {s:.1g})" for a, r, s in rows)
    assert acceptance(7, ok, f"{detail}; gaps in combined se {gaps[0]:.3g}, {gaps[1]:.3g}")


def test_criterion_08_weakest_lm_dominance(acceptance):
    ladder = [(16, 256), (32, 512), (32, 1024)]
    base = ExperimentPlan(function="TIMEROUGH", nu=1.0, sigma=0.05, generator="fgn",
                          alpha=0.8, ladder=ladder, replicates=50, seed=8)
    rho = resolve_rho(base)
    mixed = ExperimentPlan(function="TIMEROUGH", nu=1.0, sigma=0.05, generator="fgn",
                           alpha=0.4, alphas=(0.8,), ladder=ladder, replicates=50, seed=8)
    f, kernel = get_test_function("TIMEROUGH"), base.kernel()
    exact, ratios = True, []
    for M, N in ladder:
        pb = EstimatorParams.build(M, N, 1.0, base.profile_alphas(M), 0.05, rho)
        pm = EstimatorParams.build(M, N, 1.0, mixed.profile_alphas(M), 0.05, rho)
        assert min(pm.alphas) == 0.4 and pm.alphas.count(0.8) == 1
        exact &= (pb.alpha_star, pb.J1, pb.J2) == (pm.alpha_star, pm.J1, pm.J2)
        exact &= all(threshold(j, M, N, pb) == threshold(j, M, N, pm) for j in range(pb.J1))
        rb, _ = monte_carlo_risk(f, kernel, base.noise(M), N, M, pb, 50)
        rm, _ = monte_carlo_risk(f, kernel, mixed.noise(M), N, M, pm, 50)
        ratios.append(rm / rb)
    ok = exact and all(0.5 <= r <= 2 for r in ratios)
    assert acceptance(8, ok, f"levels/thresholds identical: {exact}; mixed/homogeneous risk "
                             f"ratios {', '.join(f'{r:.3f}' for r in ratios)}")


def test_criterion_09_regime_golden_table(acceptance, tmp_path, capsys):
    assert main(["rates", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    with open(tmp_path / "rates.csv", newline="") as fh:
        rows = {(float(r["s1"]), float(r["p"])): r for r in csv.DictReader(fh)}
    checks = [
        float(rows[(4.0, 2.0)]["exponent"]) == 2 / 3,
        float(rows[(2.0, 2.0)]["exponent"]) == 4 / 7,
        float(rows[(1.0, 1.0)]["exponent"]) == 1 / 3,
        float(rows[(1.0, 1.0)]["lower_exponent"]) == 1 / 3,
        (rows[(3.0, 2.0)]["xi1"], rows[(3.0, 2.0)]["xi2"]) == ("1", "0"),
        (rows[(1.5, 1.0)]["xi1"], rows[(1.5, 1.0)]["xi2"]) == ("0", "1"),
    ]
    ok = all(checks)
    assert acceptance(9, ok, f"{sum(checks)}/6 golden entries exact "
                             f"(2/3, 4/7, 1/3, lower 1/3, xi1 boundary, xi2 boundary)")


def test_criterion_10_oracle_equivalence(acceptance, daub):
    gen = np.random.default_rng(10)
    worst = 0.0
    bases = {M: daub_basis_ref(daub.filter_taps, M) for M in (8, 16)}
    kernels = [KernelSpec(0.0), KernelSpec(1.0), KernelSpec(2.0, "smooth_power"),
               KernelSpec(0.7, "pure_power", "cosine"), KernelSpec(1.3, "smooth_power", "ramp")]
    for _ in range(200):
        N = int(gen.choice([16, 32, 64]))
        M = int(gen.choice([8, 16]))
        kernel = kernels[gen.integers(len(kernels))]
        Yhat = dft_profiles(gen.standard_normal((N, M)) * gen.uniform(0.1, 3))
        j1 = int(gen.integers(-1, int(math.log2(N)) - 1))
        k1 = 0 if j1 < 0 else int(gen.integers(2 ** j1))
        pos = int(gen.integers(M))
        j2 = SCALING if pos == 0 else pos.bit_length() - 1
        k2 = 0 if pos == 0 else pos - 2 ** j2
        ours = beta_tilde(Yhat, kernel, WaveletIndex(j1, k1, j2, k2))
        ref = beta_tilde_ref(Yhat, lambda m, x: complex(kernel_fourier(kernel, m, x)),
                             j1, k1, bases[M][pos])
        worst = max(worst, abs(ours - ref))
    ok = worst <= 1e-9
    assert acceptance(10, ok, f"max |beta_tilde - brute force| = {worst:.2e} over 200 instances")
