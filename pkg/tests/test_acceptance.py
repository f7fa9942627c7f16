"""Full-scale acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (collected again in the terminal
summary) and then asserts. Tolerances and replicate counts are the stated
ones; nothing is scaled down. Deselect with ``-m "not acceptance"``.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from enumeration import profile_law
from yulewave.cli import parse_and_dispatch
from yulewave.constants import ModelParams, solve_critical_thetas
from yulewave.drmota import extract_D
from yulewave.harness import bst_experiment, oscillation_experiment, switch_identity_check
from yulewave.lattice import EmpiricalLattice
from yulewave.martingales import additive_samples, one_step_check
from yulewave.oracle import lattice_cdf, solve_hierarchy
from yulewave.rng import derive_seed
from yulewave.simulator import GenerationProfile, simulate_batch, simulate_until_count
from yulewave.waves import left_tail_deviation, max_wave, right_tail_check, wave_residual

pytestmark = pytest.mark.acceptance

MASTER_SEED = 20240917
R = 10**5


def status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def test_criterion_01_constants(verdict):
    start = time.perf_counter()
    worst = 0.0
    for beta in (1.0, 2.0):
        k = solve_critical_thetas(ModelParams(beta))
        worst = max(worst, abs(k.theta_plus - 0.768) / 5e-4, abs(k.theta_minus + 1.678) / 5e-4,
                    abs(k.c_plus - 4.311 * beta) / (5e-4 * beta), abs(k.c_minus - 0.373 * beta) / (5e-4 * beta))
    elapsed = time.perf_counter() - start
    ok = worst <= 1.0 and elapsed < 1.0
    verdict(1, status(ok), f"worst error / tolerance = {worst:.3f}, {elapsed:.3f} s (< 1 s)")
    assert ok


def test_criterion_02_oracle_closed_forms(verdict):
    start = time.perf_counter()
    sol = solve_hierarchy("max", t_end=10.0)
    elapsed = time.perf_counter() - start
    # every grid node plus off-grid points read through the interpolant
    t = sol.t_grid
    off = np.linspace(0.0, 10.0, 1237)
    v0 = np.concatenate([sol.values[0], [sol.at_time(x)[0] for x in off]])
    v1 = np.concatenate([sol.values[1], [sol.at_time(x)[1] for x in off]])
    t = np.concatenate([t, off])
    err0 = np.max(np.abs(v0 - np.exp(-t)))
    err1 = np.max(np.abs(v1 - (2 * np.exp(-t) - np.exp(-2 * t))))
    ok = max(err0, err1) <= 1e-8 and elapsed < 1.0
    verdict(2, status(ok), f"max |h0 error| = {err0:.2e}, max |h1 error| = {err1:.2e} (<= 1e-8), "
                           f"{elapsed:.3f} s (< 1 s)")
    assert ok


def test_criterion_03_tree_profiles(verdict):
    start = time.perf_counter()
    worst = 0.0
    h4 = None
    for n in range(2, 7):
        b = simulate_batch(n=n, replicates=R, master_seed=derive_seed(MASTER_SEED, 3, n), keep_profiles=True)
        seen = {}
        for p in b.profiles:
            key = tuple((int(g), int(c)) for g, c in enumerate(p.counts) if c)
            seen[key] = seen.get(key, 0) + 1
        law = profile_law(n)
        if set(seen) - set(law):
            worst = math.inf
        for prof, prob in law.items():
            p = float(prob)
            gap = abs(seen.get(prof, 0) / R - p)
            se = math.sqrt(p * (1 - p) / R)
            worst = max(worst, gap / se if se > 0 else (0.0 if gap == 0 else math.inf))
        if n == 4:
            h4 = float(np.mean(b.x_max == 2))
    z4 = abs(h4 - 1 / 3) / math.sqrt(2 / 9 / R)
    elapsed = time.perf_counter() - start
    ok = worst <= 4 and z4 <= 4 and elapsed < 30
    verdict(3, status(ok), f"worst atom deviation = {worst:.2f} se (<= 4), P(H_4=2) = {h4:.4f} "
                           f"({z4:.2f} se from 1/3), {elapsed:.1f} s (< 30 s)")
    assert ok


def test_criterion_04_simulator_vs_oracle(verdict):
    start = time.perf_counter()
    sol = solve_hierarchy("max", t_end=8.0)
    gate = 3 / (2 * math.sqrt(R)) + 0.005
    dists = []
    for t in (2.0, 5.0, 8.0):
        b = simulate_batch(t=t, replicates=R, master_seed=derive_seed(MASTER_SEED, 4, int(t)))
        ks, cdf = lattice_cdf(sol, t)
        emp = EmpiricalLattice.from_samples("X_max", b.x_max).cdf_at(ks)
        dists.append(float(np.max(np.abs(emp - cdf))))
    elapsed = time.perf_counter() - start
    ok = max(dists) <= gate and elapsed < 300
    verdict(4, status(ok), "sup distances at t = 2, 5, 8: " + ", ".join(f"{d:.4f}" for d in dists)
            + f" (<= {gate:.4f}), {elapsed:.1f} s (< 300 s)")
    assert ok


def test_criterion_05_wave_validity(verdict):
    start = time.perf_counter()
    params = ModelParams(1.0)
    k = solve_critical_thetas(params)
    w = max_wave(k, params)
    res = wave_residual(w, params, window=(-20.0, 20.0))
    left = left_tail_deviation(w, params, window=(-20.0, -10.0))
    right = right_tail_check(w, k.theta_plus, window=(10.0, 18.0)).max_slope_deviation
    elapsed = time.perf_counter() - start
    ok = res <= 1e-6 and left <= 0.01 and right <= 0.02 and elapsed < 60
    verdict(5, status(ok), f"residual = {res:.2e} (<= 1e-6), left-tail deviation = {left:.4f} (<= 0.01), "
                           f"right slope deviation = {right:.4f} (<= 0.02), {elapsed:.1f} s (< 60 s)")
    assert ok


def _lattice_summary(res):
    parts = []
    for side in ("max", "min"):
        d = res.distances(side)
        parts.append(f"{side} " + "/".join(f"{x:.4f}" for x in d))
    return "; ".join(parts)


def test_criterion_06_oscillation(verdict):
    start = time.perf_counter()
    res = oscillation_experiment([6.0, 9.0, 12.0], R, seed=MASTER_SEED)
    elapsed = time.perf_counter() - start
    vs = res.verdicts(0.05)
    ok = all(v.passed for v in vs) and elapsed < 1800
    verdict(6, status(ok), f"sup distances at t = 6, 9, 12: {_lattice_summary(res)} "
                           f"(nonincreasing, final <= 0.05), {elapsed:.0f} s (< 1800 s)")
    assert ok, [v for v in vs if not v.passed]


def test_criterion_07_bst(verdict):
    start = time.perf_counter()
    res = bst_experiment([2**10, 2**14, 2**18], R, seed=MASTER_SEED)
    elapsed = time.perf_counter() - start
    vs = res.verdicts(0.05)
    ok = all(v.passed for v in vs) and elapsed < 1800
    verdict(7, status(ok), f"sup distances at n = 2^10, 2^14, 2^18: {_lattice_summary(res)} "
                           f"(nonincreasing, final <= 0.05), {elapsed:.0f} s (< 1800 s)")
    assert ok, [v for v in vs if not v.passed]


def test_criterion_08_switch_identity(verdict):
    start = time.perf_counter()
    res = switch_identity_check([(1, 1.0), (10, 3.0), (20, 5.0)], R, seed=MASTER_SEED)
    elapsed = time.perf_counter() - start
    vs = res.verdicts()
    ok = all(v.passed for v in vs) and elapsed < 600
    detail = ", ".join(f"({r.n},{r.t:g}) {r.difference / r.pooled_se:.2f} se" for r in res.rows)
    closed = max(v.value for v in vs if "closed_form" in v.statistic)
    verdict(8, status(ok), f"differences {detail} (<= 3), (1,1) vs 1 - 1/e {closed:.2f} se (<= 3), "
                           f"{elapsed:.0f} s (< 600 s)")
    assert ok


def _fuzzed_profiles(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.choice([10, 100, 1000]))
        if i % 2 == 0:
            out.append(simulate_until_count(n, seed=derive_seed(seed, i)))
        else:
            depth = int(rng.integers(1, 40))
            counts = rng.multinomial(n, rng.dirichlet(np.ones(depth)))
            out.append(GenerationProfile(counts.astype(np.int64), n))
    return out


def test_criterion_09_martingales(verdict):
    start = time.perf_counter()
    k = solve_critical_thetas(ModelParams(1.0))
    zs = (0.7, math.exp(k.theta_plus), 2.0)
    worst_m = worst_d = 0.0
    for i, p in enumerate(_fuzzed_profiles(1000, derive_seed(MASTER_SEED, 9))):
        z = zs[i % 3]
        worst_m = max(worst_m, one_step_check(p, z))
        worst_d = max(worst_d, one_step_check(p, z, derivative=True))
    w = additive_samples(0.0, 12.0, 10**4, derive_seed(MASTER_SEED, 9, 12))
    ks = stats.kstest(w, "expon")
    elapsed = time.perf_counter() - start
    ok = worst_m <= 1e-12 and worst_d <= 1e-10 and ks.pvalue >= 0.01 and elapsed < 300
    verdict(9, status(ok), f"one-step M {worst_m:.1e} (<= 1e-12), dM {worst_d:.1e} (<= 1e-10), "
                           f"KS p-value {ks.pvalue:.3f} (>= 0.01), {elapsed:.0f} s (< 300 s)")
    assert ok


def test_criterion_10_drmota(verdict):
    start = time.perf_counter()
    k = solve_critical_thetas(ModelParams(1.0))
    rep = extract_D(500, k)
    y1 = abs(math.exp(rep.log_y[1]) - 2.0)
    y2 = abs(math.exp(rep.log_y[2]) - 10 / 3)
    tail = float(np.max(np.abs(np.diff(rep.D[-51:]))))
    growth = abs(rep.growth_at(300) - 1 / k.c_plus)
    elapsed = time.perf_counter() - start
    ok = y1 <= 1e-10 and y2 <= 1e-10 and tail <= 1e-3 and growth <= 1e-3 and elapsed < 120
    verdict(10, status(ok), f"|y1(1) - 2| = {y1:.1e}, |y2(1) - 10/3| = {y2:.1e} (<= 1e-10), "
                            f"Cauchy tail {tail:.2e} (<= 1e-3), growth gap at 300 = {growth:.3e} (<= 1e-3), "
                            f"{elapsed:.0f} s (< 120 s)")
    assert ok


def test_criterion_11_reproducibility(verdict, tmp_path):
    runs = {
        "simulate": ["simulate", "--t", "6", "--replicates", "400"],
        "switch": ["verify", "switch", "--pairs", "1:1", "10:3", "--replicates", "4000"],
        "oscillation": ["verify", "oscillation", "--t-list", "3", "4", "--replicates", "10000"],
    }
    identical = []
    for name, argv in runs.items():
        outputs = []
        for label, workers in (("a", "1"), ("b", "1"), ("c", "3")):
            out = tmp_path / name / label
            parse_and_dispatch(argv + ["--workers", workers, "--master-seed", str(MASTER_SEED),
                                       "--output-dir", str(out)])
            outputs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        identical.append(bool(outputs[0]) and outputs[0] == outputs[1] == outputs[2])
    ok = all(identical)
    verdict(11, status(ok), "byte-identical CSVs on rerun and with 3 workers: "
            + ", ".join(f"{n} {'yes' if s else 'no'}" for n, s in zip(runs, identical)))
    assert ok


def test_criterion_12_excluded(verdict):
    verdict(12, "EXCLUDED", "log-log fluctuation constants, exact C+- and K, constancy of the E[F_t] limit: "
                            "not reproducible at desk scale (shifts absorb the constants; ft-scan reports only)")
    pytest.skip("documented exclusion")
