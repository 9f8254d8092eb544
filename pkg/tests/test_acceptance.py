"""Acceptance suite: one test per release criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the full suite takes roughly 15 minutes on one desktop core (the
benchmark-grid and test-calibration criteria dominate).
"""

import math
import time

import numpy as np
import pytest

from conftest import random_pattern_tensor, random_symmetric_tensor, random_unit_lower
from limiam.bench import BenchmarkConfig, Method, find_cell, run_grid
from limiam.discover import estimate_B
from limiam.meanind import (
    FiniteOrderScorer,
    KernelScorer,
    MomentScorer,
    ResidualPair,
    SieveScorer,
    score_finite_order,
    score_kernel,
    score_moment,
    score_sieve,
)
from limiam.popfail import (
    Cumulant4Config,
    Verdict,
    genericity_score_2d,
    jade_empirical_check,
    jade_reversal_verdict,
    residual_dependence_scores,
)
from limiam.simulate import (
    AuxDistribution,
    Independent,
    Threshold,
    WeightedDag,
    generate_dataset,
    sample_disturbances,
    scale_mixture_2d,
)
from limiam.svar import (
    bootstrap_se_B,
    fit_var,
    mutual_independence_test,
    ordered_meanind_test,
    svar_discover,
)
from limiam.tensor import (
    SymmetricTensor,
    TriangularPattern,
    higher_order_ldl,
    reversed_factorization,
    tensor_action,
)

EXAMPLE_CONFIG = Cumulant4Config(0.258, 0.258, 0.81)


def _verdict_line(num, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_01_jade_reversal_exact():
    start = time.perf_counter()
    verdict = jade_reversal_verdict(EXAMPLE_CONFIG)
    ok = (
        verdict.verdict is Verdict.REVERSED
        and abs(verdict.criterion_lhs - 28.901376) < 1e-6
        and abs(verdict.criterion_rhs - 1.065024) < 1e-6
    )
    for c in (0.01, 0.1, 0.27, 0.5, 0.81, 1.0):
        slice_verdict = jade_reversal_verdict(Cumulant4Config(3 * c, 3 * c, c), rtol=1e-12)
        ok = ok and slice_verdict.verdict is Verdict.BOUNDARY
    reps = 1000
    t0 = time.perf_counter()
    for _ in range(reps):
        jade_reversal_verdict(EXAMPLE_CONFIG)
    per_call = (time.perf_counter() - t0) / reps
    ok = ok and per_call < 1e-3
    _verdict_line(
        1,
        ok,
        f"rotation-contrast reversal verdict exact "
        f"(lhs 28.901376, rhs 1.065024, boundary slice held, "
        f"{per_call * 1e6:.1f} us/call, total {time.perf_counter() - start:.3f}s)",
    )


def test_criterion_02_residual_score_thresholds():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    ok = True
    for _ in range(1000):
        k1, k2 = rng.uniform(-1.5, 3.0, size=2)
        c = rng.uniform(-2.0, 2.0)
        scores = residual_dependence_scores(Cumulant4Config(k1, k2, c))
        ok = ok and abs(scores.true_source_score - abs(c)) <= 1e-12
        ok = ok and abs(scores.reversed_source_score - abs(k1 + k2 - 2 * c) / 4.0) <= 1e-12
    for k in np.linspace(0.05, 3.0, 25):
        below = Cumulant4Config(k, k, k / 3.0 - 1e-6)
        above = Cumulant4Config(k, k, k / 3.0 + 1e-6)
        ok = ok and residual_dependence_scores(below).verdict is Verdict.TRUE_ORDER
        ok = ok and jade_reversal_verdict(below).verdict is Verdict.TRUE_ORDER
        ok = ok and residual_dependence_scores(above).verdict is Verdict.REVERSED
        ok = ok and jade_reversal_verdict(above).verdict is Verdict.REVERSED
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 1.0
    _verdict_line(
        2,
        ok,
        f"residual dependence scores match closed forms on a 1000-point sweep "
        f"and flip with the rotation criterion at c = k/3 ({elapsed:.2f}s)",
    )


def test_criterion_03_higher_order_ldl():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_recovery = 0.0
    worst_pattern = 0.0
    for _ in range(200):
        p = int(rng.integers(2, 7))
        d = int(rng.integers(2, 6))
        l0 = random_unit_lower(rng, p, scale=0.8)
        d0 = random_pattern_tensor(rng, p, d)
        tensor = tensor_action(l0, d0)
        l1, d1 = higher_order_ldl(tensor)
        scale = max(1.0, d0.max_abs())
        worst_recovery = max(
            worst_recovery,
            float(np.max(np.abs(l1.matrix - l0.matrix))),
            max(abs(d1[k] - v) for k, v in d0.items()) / scale,
        )
        worst_pattern = max(
            worst_pattern,
            max(
                (abs(d1[(i,) * (d - 1) + (j,)]) for i in range(p) for j in range(i + 1, p)),
                default=0.0,
            ),
        )
    classical_ok = True
    for _ in range(10):
        root = rng.normal(size=(5, 5))
        spd = root @ root.T + 5.0 * np.eye(5)
        l1, d1 = higher_order_ldl(SymmetricTensor.from_dense(spd))
        dense = d1.to_dense()
        recon = l1.matrix @ np.diag(np.diag(dense)) @ l1.matrix.T
        classical_ok = classical_ok and np.max(np.abs(recon - spd)) < 1e-8
        classical_ok = classical_ok and np.max(np.abs(dense - np.diag(np.diag(dense)))) < 1e-10
    elapsed = time.perf_counter() - start
    ok = worst_recovery < 1e-8 and worst_pattern < 1e-10 and classical_ok and elapsed < 10.0
    _verdict_line(
        3,
        ok,
        f"triangular tensor decomposition round trip on 200 instances "
        f"(worst recovery {worst_recovery:.2e}, worst pattern {worst_pattern:.2e}, "
        f"order-2 matches classical LDL, {elapsed:.2f}s)",
    )


def test_criterion_04_reversed_factorization_witness():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 6))
        m = np.diag(rng.uniform(0.3, 2.5, size=2))
        m[0, 1] = m[1, 0] = rng.normal()
        t = random_symmetric_tensor(rng, 2, d)
        for fac in reversed_factorization(m, t):
            m_rec, t_rec = fac.reconstruct()
            worst = max(worst, float(np.max(np.abs(m_rec - m))))
            worst = max(worst, max(abs(t_rec[k] - v) for k, v in t.items()))
    ok = worst < 1e-10
    _verdict_line(
        4,
        ok,
        f"both source orders reconstruct 100 random coupled pairs "
        f"(worst entry error {worst:.2e})",
    )


def test_criterion_05_coupled_moment_identity():
    rng = np.random.default_rng(5)
    worst = 0.0
    exact_zero = True
    for d in (3, 4, 5):
        for _ in range(100):
            md = rng.normal(size=d + 1)
            md[d - 1] = 0.0
            second = (rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0))
            direct, expanded = genericity_score_2d(second, md, rng.normal(), d)
            worst = max(worst, abs(direct - expanded) / max(1.0, abs(direct)))
        md = rng.normal(size=d + 1)
        md[d - 1] = 0.0
        md[1] = 0.0
        direct, expanded = genericity_score_2d((1.0, 1.0), md, 0.0, d)
        exact_zero = exact_zero and direct == 0.0 and expanded == 0.0
    ok = worst < 1e-10 and exact_zero
    _verdict_line(
        5,
        ok,
        f"direct and expanded source statistics agree over 300 random configs "
        f"(worst {worst:.2e}); zero coefficient gives exactly zero",
    )


def test_criterion_06_scorer_calibration():
    start = time.perf_counter()
    ratios = {name: [] for name in ("kernel", "sieve", "moment", "finite-order")}

    def linear_scores(n, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-1, 1, n)
        y = 0.8 * x + rng.uniform(-1, 1, n)
        pair = ResidualPair.from_regression(y, x)
        data = np.column_stack([x - x.mean(), y - y.mean()])
        return {
            "kernel": score_kernel(pair, KernelScorer(), seed=seed),
            "sieve": score_sieve(pair, SieveScorer(), seed=seed),
            "moment": score_moment(pair, MomentScorer()),
            "finite-order": score_finite_order(data, 0, 4),
        }

    for seed in range(50):
        small = linear_scores(500, seed)
        large = linear_scores(5000, seed)
        for name in ratios:
            ratios[name].append(small[name] / large[name])
    medians = {name: float(np.median(vals)) for name, vals in ratios.items()}
    shrink_ok = all(m >= 3.0 for m in medians.values())

    target = 4.0 / 45.0
    x = np.random.default_rng(1234).uniform(-1, 1, 5000)
    pair = ResidualPair.from_regression(x**2 - np.mean(x**2), x)
    kernel_score = score_kernel(pair, KernelScorer(), seed=0)
    sieve_score = score_sieve(pair, SieveScorer(), seed=0)
    moment_score = score_moment(pair, MomentScorer())
    oracle_ok = (
        abs(kernel_score - target) < 0.2 * target
        and abs(sieve_score - target) < 0.2 * target
        and abs(moment_score - target**2) < 0.2 * target**2
    )
    elapsed = time.perf_counter() - start
    ok = shrink_ok and oracle_ok and elapsed < 120.0
    shrink_text = ", ".join(f"{k} {v:.1f}x" for k, v in medians.items())
    _verdict_line(
        6,
        ok,
        f"median score shrinkage 500->5000 [{shrink_text}]; quadratic oracle "
        f"kernel {kernel_score:.4f} / sieve {sieve_score:.4f} vs {target:.4f}, "
        f"moment {moment_score:.5f} vs {target**2:.5f} ({elapsed:.0f}s)",
    )


@pytest.mark.slow
def test_criterion_07_benchmark_grid():
    start = time.perf_counter()
    cfg = BenchmarkConfig(
        dims=(2, 3, 4),
        T=500,
        replications=25,
        methods=(
            Method("direct-lingam"),
            Method("limiam-kernel", KernelScorer()),
            Method("limiam-sieve", SieveScorer()),
            Method("limiam-moment", MomentScorer()),
            Method("limiam-finite-order", FiniteOrderScorer(4)),
        ),
        base_seed=20_240_501,
    )
    cells = run_grid(cfg)

    aux_names = [a.value for a in cfg.aux_set]
    gaps = []
    for p in cfg.dims:
        kernel_avg = np.mean(
            [find_cell(cells, aux, "independent", p, "limiam-kernel").success_rate for aux in aux_names]
        )
        lingam_avg = np.mean(
            [find_cell(cells, aux, "independent", p, "direct-lingam").success_rate for aux in aux_names]
        )
        gaps.append(abs(kernel_avg - lingam_avg))
    independent_ok = max(gaps) <= 0.15

    dependent_designs = ("lagged-hetero", "threshold", "conditional-mixture")
    success_wins = 0
    shd_wins = 0
    for design in dependent_designs:
        for aux in aux_names:
            kernel_cell = find_cell(cells, aux, design, 4, "limiam-kernel")
            lingam_cell = find_cell(cells, aux, design, 4, "direct-lingam")
            success_wins += kernel_cell.success_rate > lingam_cell.success_rate
            shd_wins += kernel_cell.mean_shd < lingam_cell.mean_shd
    elapsed = time.perf_counter() - start
    ok = independent_ok and success_wins >= 10 and shd_wins >= 10 and elapsed < 1800.0
    _verdict_line(
        7,
        ok,
        f"benchmark grid: independent-design gap max {max(gaps):.2f} (<= 0.15); "
        f"dependent designs at p=4: kernel beats baseline on success in "
        f"{success_wins}/12 and on SHD in {shd_wins}/12 environments "
        f"({elapsed:.0f}s)",
    )


def test_criterion_08_empirical_rotation():
    start = time.perf_counter()
    reversal_errors = []
    faithful_errors = []
    for seed in range(5):
        theta = jade_empirical_check(EXAMPLE_CONFIG, T=100_000, seed=seed)
        reversal_errors.append(abs(theta - np.pi / 4))
        theta0 = jade_empirical_check(Cumulant4Config(-1.2, -1.2, 0.0), T=100_000, seed=seed)
        faithful_errors.append(min(theta0, np.pi / 2 - theta0))
    elapsed = time.perf_counter() - start
    ok = max(reversal_errors) < 0.05 and max(faithful_errors) < 0.05 and elapsed < 60.0
    _verdict_line(
        8,
        ok,
        f"empirical rotation: reversal case within {max(reversal_errors):.3f} of pi/4, "
        f"independent case within {max(faithful_errors):.3f} of 0 mod pi/2 "
        f"over 5 seeds ({elapsed:.1f}s)",
    )


@pytest.mark.slow
def test_criterion_09_test_calibration():
    start = time.perf_counter()
    level = 0.05

    ordered_null = []
    for seed in range(200):
        eps = sample_disturbances(3, 300, AuxDistribution.UNIFORM, Threshold(), seed=seed)
        ordered_null.append(ordered_meanind_test(eps, permutations=199, seed=seed).p_value)
    ordered_null = np.asarray(ordered_null)
    ordered_size = float(np.mean(ordered_null <= level))

    ordered_power = 0
    for seed in range(100):
        rng = np.random.default_rng(10_000 + seed)
        e1 = rng.uniform(-1, 1, 500)
        e2 = e1**2 - np.mean(e1**2)
        report = ordered_meanind_test(np.column_stack([e1, e2]), permutations=99, seed=seed)
        ordered_power += report.p_value <= level
    ordered_power /= 100.0

    dhsic_null = []
    for seed in range(200):
        eps = sample_disturbances(3, 300, AuxDistribution.UNIFORM, Independent(), seed=seed)
        dhsic_null.append(mutual_independence_test(eps, permutations=199, seed=seed).p_value)
    dhsic_null = np.asarray(dhsic_null)
    dhsic_size = float(np.mean(dhsic_null <= level))

    dhsic_power = 0
    for seed in range(100):
        eps = scale_mixture_2d(1000, seed=20_000 + seed)
        report = mutual_independence_test(eps, permutations=99, seed=seed)
        dhsic_power += report.p_value <= level
    dhsic_power /= 100.0

    def ks_uniform(values):
        grid = np.sort(values)
        n = grid.size
        upper = np.max(np.arange(1, n + 1) / n - grid)
        lower = np.max(grid - np.arange(0, n) / n)
        return float(max(upper, lower))

    ordered_ks = ks_uniform(ordered_null)
    dhsic_ks = ks_uniform(dhsic_null)
    elapsed = time.perf_counter() - start
    ok = (
        0.01 <= ordered_size <= 0.10
        and 0.01 <= dhsic_size <= 0.10
        and ordered_power > 0.9
        and dhsic_power > 0.9
        and ordered_ks < 0.1
        and dhsic_ks < 0.1
        and elapsed < 600.0
    )
    _verdict_line(
        9,
        ok,
        f"permutation tests: sizes {ordered_size:.3f} / {dhsic_size:.3f} in [0.01, 0.10], "
        f"powers {ordered_power:.2f} / {dhsic_power:.2f} > 0.9, "
        f"null KS {ordered_ks:.3f} / {dhsic_ks:.3f} < 0.1 ({elapsed:.0f}s)",
    )


@pytest.mark.slow
def test_criterion_10_svar_pipeline():
    start = time.perf_counter()
    p = 3
    phi = np.array([[0.5, 0.1, 0.0], [0.0, 0.4, 0.1], [0.1, 0.0, 0.3]])
    dag = WeightedDag(
        (0, 1, 2),
        np.array([[0.0, 0.0, 0.0], [0.6, 0.0, 0.0], [0.4, 0.5, 0.0]]),
    )

    def simulate(seed, T=2000):
        eps = sample_disturbances(p, T, AuxDistribution.UNIFORM, Threshold(), seed=seed)
        shocks = generate_dataset(dag, eps)
        x = np.zeros((T, p))
        for t in range(1, T):
            x[t] = phi @ x[t - 1] + shocks[t]
        return x

    hits = 0
    b21_draws = []
    for seed in range(100):
        x = simulate(seed)
        fit = fit_var(x, 1)
        disc = svar_discover(fit.residuals, KernelScorer(), seed=seed)
        hits += tuple(disc.result.order) == (0, 1, 2)
        b21_draws.append(estimate_B(fit.residuals, (0, 1, 2))[1, 0])
    mc_sd = float(np.std(b21_draws, ddof=1))

    boot_ses = []
    for seed in range(5):
        x = simulate(500 + seed)
        se = bootstrap_se_B(x, 1, (0, 1, 2), replicates=200, seed=seed)
        boot_ses.append(se[1, 0])
    boot_se = float(np.median(boot_ses))
    ratio = boot_se / mc_sd

    elapsed = time.perf_counter() - start
    ok = hits >= 80 and (1.0 / 1.5) <= ratio <= 1.5
    _verdict_line(
        10,
        ok,
        f"SVAR pipeline: correct order {hits}/100 (>= 80); bootstrap SE "
        f"{boot_se:.4f} vs Monte-Carlo sd {mc_sd:.4f} (ratio {ratio:.2f} in "
        f"[0.67, 1.5]) ({elapsed:.0f}s)",
    )
