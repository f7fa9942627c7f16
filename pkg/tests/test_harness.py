import math

import numpy as np
import pytest

from yulewave.constants import ModelParams, centring_a, solve_critical_thetas
from yulewave.drmota import exact_bst_law
from yulewave.errors import DomainError, PreconditionError, RangeError
from yulewave.harness import (Verdict, _core_mass, bst_experiment, centred_maxima, compute_Hf, compute_Pf,
                              ft_periodicity_scan, hf_pf_comparison, oscillation_experiment,
                              standard_test_functions, switch_identity_check, tail_fit)
from yulewave.lattice import EmpiricalLattice
from yulewave.oracle import solve_hierarchy
from yulewave.simulator import simulate_batch
from yulewave.waves import bst_limit_profile


@pytest.fixture(scope="module")
def small_oscillation(waves):
    return oscillation_experiment([3.0, 4.0, 5.0], 10**4, seed=17, waves=waves)


@pytest.fixture(scope="module")
def small_profiles():
    return bst_limit_profile("max", 2**12, 16), bst_limit_profile("min", 2**12, 16)


@pytest.fixture(scope="module")
def t8_samples():
    x, a, _ = centred_maxima(8.0, 10**5, seed=3)
    return x, a


def test_oscillation_structure(small_oscillation):
    res = small_oscillation
    assert set(res.shifts) == {"max", "min"}
    assert [r.index for r in res.side("max")] == [3.0, 4.0, 5.0]
    names = [v.statistic for v in res.verdicts()]
    assert names == ["max_largest_increase", "max_final_sup_distance",
                     "min_largest_increase", "min_final_sup_distance"]
    header, rows = res.table()
    assert len(rows) == 6 and header[0] == "side"
    for r in res.rows:
        assert r.lattice.replicates == 10**4
        assert r.lattice.counts.sum() == 10**4


def test_oscillation_matches_oracle(small_oscillation):
    for r in small_oscillation.rows:
        assert r.reference_distance <= 3 / (2 * math.sqrt(10**4))


def test_oscillation_preconditions(waves):
    with pytest.raises(DomainError):
        oscillation_experiment([4.0, 3.0], 10**4, waves=waves)
    with pytest.raises(DomainError):
        oscillation_experiment([3.0], 100, waves=waves)


def test_oscillation_reproducible_across_workers(waves):
    a = oscillation_experiment([2.0, 3.0], 10**4, seed=5, waves=waves, workers=1)
    b = oscillation_experiment([2.0, 3.0], 10**4, seed=5, waves=waves, workers=3)
    assert a.table() == b.table()
    assert a.lattice_table() == b.lattice_table()


def test_verdict_dict():
    v = Verdict("x", "s", 0.1, 0.2, True)
    assert v.as_dict() == {"experiment": "x", "statistic": "s", "value": 0.1, "threshold": 0.2, "pass": True}


def test_tree_of_four_leaves():
    law_max = exact_bst_law([4], "max").column(4)
    law_min = exact_bst_law([4], "min").column(4)
    assert law_max[2] == pytest.approx(1 / 3, abs=1e-15)
    assert law_min[2] == pytest.approx(1 / 3, abs=1e-15)
    R = 10**5
    b = simulate_batch(n=4, replicates=R, master_seed=8)
    se = math.sqrt(2 / 9 / R)
    assert abs(np.mean(b.x_max <= 2) - 1 / 3) <= 4 * se
    assert abs(np.mean(b.x_min >= 2) - 1 / 3) <= 4 * se


def test_bst_experiment_small(small_profiles):
    R = 5000
    res = bst_experiment([2**6, 2**8, 2**10], R, seed=2, profiles=small_profiles)
    assert [r.index for r in res.side("min")] == [64, 256, 1024]
    for r in res.rows:
        assert r.reference_distance <= 3 / (2 * math.sqrt(R)) + 0.005
    with pytest.raises(DomainError):
        bst_experiment([8, 4], R, profiles=small_profiles)


def test_switch_identity_small():
    res = switch_identity_check([(1, 1.0), (6, 2.0)], 20000, seed=4)
    assert all(r.passed for r in res.rows)
    assert all(v.passed for v in res.verdicts())
    one = res.rows[0]
    assert one.closed_form == pytest.approx(1 - math.exp(-1))
    assert not one.inconclusive and one.censored_fraction == 0.0
    assert len(res.verdicts()) == 4


def test_tail_fit(t8_samples):
    x, _ = t8_samples
    fit = tail_fit(8.0, len(x), samples=x)
    assert fit.alpha_prime > 0 and fit.negative_at_99
    assert fit.points >= 3 and 0 < fit.r_squared <= 1
    assert fit.right_slope < 0
    assert fit.left_slope_from_2 < 0 and fit.left_slope_from_4 < 0


def test_tail_fit_needs_mass():
    with pytest.raises(RangeError):
        a8 = math.floor(centring_a(8.0, solve_critical_thetas(ModelParams())))
        tail_fit(8.0, 10**5, samples=np.full(1000, a8))
    with pytest.raises(DomainError):
        tail_fit(3.0, 100)


def test_hf_examples(t8_samples):
    x, a = t8_samples
    one = compute_Hf(lambda y: 1.0, 8.0, len(x), samples=x)
    assert one.value == 1.0 and one.stderr == 0.0
    lat = EmpiricalLattice.from_samples("X_max", x)
    ind = compute_Hf(lambda y: y <= 0.0, 8.0, len(x), samples=x)
    assert ind.value == pytest.approx(lat.cdf_at([math.floor(a)])[0], abs=1e-15)


def test_hf_growth_precondition(t8_samples):
    x, _ = t8_samples
    with pytest.raises(PreconditionError, match="moment may not exist"):
        compute_Hf(lambda y: np.exp(2.0 * np.asarray(y)), 8.0, len(x), samples=x, delta=2.0)


def test_pf_constant_function(max_wave_table):
    r = compute_Pf(lambda y: 1.0, 0.37, max_wave_table)
    assert abs(r.value - 1.0) <= 1e-6
    assert r.residual_bound <= 1e-6
    assert 60 <= r.window <= 70


@pytest.mark.xfail(strict=True, reason="the wave's left tail still carries 2e-3 mass beyond 25 lattice steps")
def test_pf_constant_function_window_25(max_wave_table):
    r = compute_Pf(lambda y: 1.0, 0.37, max_wave_table, truncation=25)
    assert abs(r.value - 1.0) <= 1e-6


@pytest.mark.parametrize("s", [0.0, 0.375, 2.90625, -4.25])
def test_pf_is_periodic(max_wave_table, s):
    # dyadic s keeps frac(s + 1) == frac(s) in floating point, so equality is exact
    for name, (f, growth) in standard_test_functions().items():
        a = compute_Pf(f, s, max_wave_table, growth=growth, tol=1e-3)
        b = compute_Pf(f, s + 1.0, max_wave_table, growth=growth, tol=1e-3)
        assert a.value == b.value, name


def test_pf_periodic_to_rounding(max_wave_table):
    f, growth = standard_test_functions()["identity"]
    a = compute_Pf(f, 0.37, max_wave_table, growth=growth, tol=1e-3)
    b = compute_Pf(f, 7.37, max_wave_table, growth=growth, tol=1e-3)
    assert a.value == pytest.approx(b.value, abs=1e-13)


@pytest.mark.parametrize("s,x", [(0.37, 0.0), (5.8, 1.5), (12.01, -2.0)])
def test_pf_indicator(max_wave_table, s, x):
    r = compute_Pf(lambda y: (np.asarray(y) <= x).astype(float), s, max_wave_table)
    expected = float(max_wave_table(math.floor(s + x) - s))
    assert abs(r.value - expected) <= r.residual_bound + 1e-12


def test_pf_errors(max_wave_table, min_wave_table):
    with pytest.raises(DomainError):
        compute_Pf(lambda y: 1.0, 0.0, min_wave_table)
    with pytest.raises(RangeError):
        compute_Pf(lambda y: 1.0, 0.0, max_wave_table, truncation=500)
    with pytest.raises(RangeError):
        compute_Pf(lambda y: 1.0, 0.0, max_wave_table, tol=1e-30)


def test_hf_pf_comparison_structure(waves):
    res = hf_pf_comparison([4.0, 5.0], 10**4, seed=1, wave=waves[0])
    header, rows = res.table()
    assert len(rows) == 6 and header[0] == "function"
    assert [v.statistic for v in res.verdicts()] == ["indicator_t5_difference", "identity_t5_difference",
                                                     "exp_t5_difference"]


def test_ft_scan_small():
    scan = ft_periodicity_scan(4.0, 4, 5000, seed=9)
    k = ModelParams()
    assert np.all(scan.estimates >= 1.0) and np.all(scan.stderr > 0)
    assert np.all(np.diff(scan.t_values) > 0)
    from yulewave.constants import solve_critical_thetas
    kk = solve_critical_thetas(k)
    frac = np.array([centring_a(t, kk) % 1.0 for t in scan.t_values])
    assert np.allclose(frac, scan.phases, atol=1e-9)
    assert scan.verdicts()[0].passed
    assert scan.amplitude >= 0


def test_ft_scan_period_shift():
    R = 20000
    a = ft_periodicity_scan(8.0, [0.0], R, seed=12)
    b = ft_periodicity_scan(8.0, [0.0], R, seed=12, shift_periods=1)
    assert b.t_values[0] > a.t_values[0]
    pooled = math.hypot(a.stderr[0], b.stderr[0])
    assert abs(a.estimates[0] - b.estimates[0]) <= 3 * pooled


def test_ft_scan_rejects_bad_phases():
    with pytest.raises(DomainError):
        ft_periodicity_scan(4.0, [1.0], 10)


def _oracle_median(sol, t):
    row = sol.at_time(t)
    return int(np.searchsorted(row, 0.5))


@pytest.mark.xfail(strict=True, reason="the exact median sits 4.5 to 5.9 below a_t on [4, 12]")
def test_median_within_three_of_centring(k1):
    sol = solve_hierarchy("max", t_end=12.0)
    offsets = [_oracle_median(sol, t) - centring_a(t, k1) for t in np.arange(4.0, 12.01, 0.5)]
    assert np.all(np.abs(offsets) <= 3.0)


@pytest.mark.xfail(strict=True, reason="exact mass on floor(a_t) + [-3, 5] at t = 12 is about 0.37")
def test_core_mass_at_t12(k1):
    sol = solve_hierarchy("max", t_end=12.0)
    row = sol.at_time(12.0)
    probs = np.diff(np.concatenate([[0.0], row]))
    lat = EmpiricalLattice.from_probabilities("X_max", 0, probs, replicates=10**12)
    assert _core_mass(lat, centring_a(12.0, k1)) >= 0.99
