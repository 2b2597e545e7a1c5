from fractions import Fraction as F

import numpy as np
import pytest

import oracles
from dslab import variance as V
from dslab.approx_sets import OverlapEngine
from dslab.arith import build_sieve
from dslab.counting import psi_mass
from dslab.psi import preset


def test_exact_variance_spot_values(sieve):
    half = preset("CONST", 10)
    r1 = V.exact_variance(1, half, sieve)
    assert (r1.psi_mass, r1.overlap_sum, r1.variance) == (1, 1, 0)
    r2 = V.exact_variance(2, half, sieve)
    assert (r2.psi_mass, r2.overlap_sum, r2.variance) == (F(3, 2), F(5, 2), F(1, 4))
    assert r2.excess == F(1, 4) - F(3, 2)


# frozen from tests/oracles.exact_variance (interval scan over every a)
FROZEN = [
    ("CONST", F(1, 2), 8, 1, F(16609, 4900)),
    ("CONST", F(1, 2), 8, 2, F(6694829699, 1944810000)),
    ("CONST", F(1, 2), 12, 2, F(1389287567771, 253101895200)),
    ("POWER", 2, 10, 2, F(199471492183, 78764805000)),
]


@pytest.mark.parametrize("name,param,Q,k,expected", FROZEN)
def test_exact_variance_frozen(name, param, Q, k, expected, sieve):
    assert V.exact_variance(Q, preset(name, Q, param), sieve, k).variance == expected


@pytest.mark.parametrize("name,param", [("CLUSTER", 6), ("PRIMES_ONLY", F(1, 3)), ("CONST", F(1, 8))])
def test_exact_variance_against_interval_oracle(name, param, sieve):
    psi = preset(name, 18, param)
    for k in (1, 2):
        Psi, second, var = oracles.exact_variance(18, psi.__getitem__, k)
        rep = V.exact_variance(18, psi, sieve, k)
        assert (rep.psi_mass, rep.overlap_sum, rep.variance) == (Psi, second, var)


def test_zero_psi_gives_zeros(sieve):
    z = preset("CONST", 30, 0)
    rep = V.exact_variance(30, z, sieve, 2)
    assert rep.psi_mass == rep.overlap_sum == rep.variance == 0
    mc = V.monte_carlo(30, z, sieve, 2, 100, 1)
    assert mc.sample_mean == 0 and mc.sample_variance == 0
    prep = V.classify_pairs(30, z, sieve, 2, F(1, 2))
    audit = V.partition_audit(prep, rep)
    assert prep.counts[V.DISJOINT] == 30 * 29 // 2
    assert audit.reconstructed == 0 and all(v == 0 for v in audit.overlap_by_class.values())


def test_ladder_matches_individual_runs(sieve):
    psi = preset("POWER", 40, 2)
    ladder = V.variance_ladder(V.dyadic_ladder(40), psi, sieve, 2)
    assert [r.Q for r in ladder] == [1, 2, 4, 8, 16, 32, 40]
    for rep in ladder:
        assert rep == V.exact_variance(rep.Q, psi, sieve, 2)


def test_threads_do_not_change_results(sieve):
    psi = preset("CLUSTER", 60)
    a = V.exact_variance(60, psi, sieve, 2, threads=1)
    b = V.exact_variance(60, psi, sieve, 2, threads=3)
    assert a == b
    pa = V.classify_pairs(60, psi, sieve, 2, F(1, 2), threads=1)
    pb = V.classify_pairs(60, psi, sieve, 2, F(1, 2), threads=2)
    assert pa == pb


def test_budget_and_argument_errors(sieve):
    psi = preset("CONST", 50)
    with pytest.raises(V.BudgetError):
        V.exact_variance(50, psi, sieve, budget=10)
    with pytest.raises(ValueError):
        V.exact_variance(60, psi, sieve)
    with pytest.raises(ValueError):
        V.monte_carlo(5, psi, sieve, 1, 1, 0)
    with pytest.raises(ValueError):
        V.monte_carlo(5, psi, sieve, 1, 10, -1)
    with pytest.raises(ValueError):
        V.classify_pairs(5, psi, sieve, 1, 1)


def test_classification_examples(sieve):
    quarter = preset("CONST", 3, F(1, 4))
    rep = V.classify_pairs(3, quarter, sieve, 2, F(1, 2))
    assert rep.class_of[(2, 3)] == V.E1
    eighth = preset("CONST", 3, F(1, 8))
    rep = V.classify_pairs(3, eighth, sieve, 1, F(1, 2))
    assert rep.class_of[(2, 3)] == V.DISJOINT
    assert all(q < r for q, r in rep.class_of)


def test_partition_audit_small_cases(sieve):
    half = preset("CONST", 50)
    prep = V.classify_pairs(2, half, sieve, 1, F(1, 2))
    assert sum(prep.counts.values()) == 1
    audit = V.partition_audit(prep, V.exact_variance(2, half, sieve))
    assert audit.overlap_sum == audit.reconstructed == F(5, 2)
    prep = V.classify_pairs(50, half, sieve, 2, F(1, 2))
    audit = V.partition_audit(prep, V.exact_variance(50, half, sieve, 2))
    assert audit.reconstructed == audit.overlap_sum
    assert sum(prep.counts.values()) == 50 * 49 // 2


def test_partition_matches_direct_classification(sieve):
    """Recompute each pair's class from the definitions with Fractions and mpmath at 100 digits."""
    import mpmath
    from dslab.arith import large_prime_sum, pair_profile, small_prime_count
    psi = preset("POWER", 90, 2)
    eps, k = F(1, 2), 2
    rep = V.classify_pairs(90, psi, sieve, k, eps)
    mpmath.mp.dps = 100
    for (q, r), cls in rep.class_of.items():
        p = pair_profile(q, r, sieve)
        D = max(r * psi[q], q * psi[r]) / p.g
        if 2 * D < 1:
            want = V.DISJOINT
        elif large_prime_sum(p, D * D) > 1 / D:
            want = V.E2
        else:
            w = small_prime_count(p, D * D)
            thr = mpmath.mpf(eps.numerator) / (eps.denominator * 4 * k) * mpmath.log(mpmath.mpf(2 * D.numerator) / D.denominator)
            want = V.E3 if w > thr else V.E1
        assert cls == want, (q, r)


def test_audit_detects_tampering(sieve):
    half = preset("CONST", 20)
    prep = V.classify_pairs(20, half, sieve, 1, F(1, 2))
    vrep = V.exact_variance(20, half, sieve)
    bad = V.VarianceReport(20, 1, vrep.psi_mass, vrep.overlap_sum + F(1, 10**9), vrep.variance, vrep.excess)
    with pytest.raises(V.AuditMismatch):
        V.partition_audit(prep, bad)


def test_disjoint_pairs_really_disjoint_without_shortcut(sieve):
    psi = preset("CLUSTER", 120)
    eng = OverlapEngine(psi, sieve)
    rep = V.classify_pairs(120, psi, sieve, 1, F(1, 2))
    for (q, r), c in rep.class_of.items():
        if c == V.DISJOINT and psi[q] and psi[r]:
            assert eng.overlap_scaled(q, r, shortcut=False)[0] == 0


def test_sampler_is_deterministic_and_block_aligned():
    a = V.sample_points(42, 1000, 2, start=V.SAMPLER_BLOCK - 500)
    b = np.concatenate([V.sample_block(42, 0, V.SAMPLER_BLOCK, 2)[-500:],
                        V.sample_block(42, 1, V.SAMPLER_BLOCK, 2)[:500]])
    assert np.array_equal(a, b)
    assert a.min() >= 0 and a.max() < 1 << 53
    assert not np.array_equal(V.sample_points(42, 10, 2), V.sample_points(43, 10, 2))


def test_monte_carlo_trivial_case(sieve):
    rep = V.monte_carlo(1, preset("CONST", 1), sieve, 1, 1000, 5)
    assert rep.sample_mean == 1 and rep.sample_variance == 0


def test_monte_carlo_determinism_across_threads(sieve):
    psi = preset("POWER", 80, 2)
    n = V.SAMPLER_BLOCK + 1234
    a = V.monte_carlo(80, psi, sieve, 2, n, 42, threads=1)
    b = V.monte_carlo(80, psi, sieve, 2, n, 42, threads=2)
    assert a == b


def test_monte_carlo_variance_close_to_exact(sieve):
    psi = preset("CONST", 100)
    exact = V.exact_variance(100, psi, sieve, 2)
    mc = V.monte_carlo(100, psi, sieve, 2, 40_000, 9)
    assert mc.psi_mass == psi_mass(100, psi, sieve, 2) == exact.psi_mass
    assert abs(float(mc.sample_variance - exact.variance)) <= 5 * float(mc.variance_se)
    assert mc.mean_error <= 4 * (mc.sample_variance / mc.samples) ** 0.5 + 0


def test_dyadic_index():
    assert V._dyadic_index(F(1, 2)) == 0
    assert V._dyadic_index(F(3, 4)) == 0
    assert V._dyadic_index(F(1)) == 1
    assert V._dyadic_index(F(7, 4)) == 1
    assert V._dyadic_index(F(2)) == 2
    for n in range(1, 200):
        for d in (1, 3, 7, 64):
            i = V._dyadic_index(F(n, d))
            assert F(2) ** (i - 1) <= F(n, d) < F(2) ** i


def test_dyadic_ladder():
    assert V.dyadic_ladder(1) == [1]
    assert V.dyadic_ladder(64) == [1, 2, 4, 8, 16, 32, 64]
    assert V.dyadic_ladder(100)[-2:] == [64, 100]


def test_classify_borderline_is_empty_at_desk_scale():
    s = build_sieve(200)
    rep = V.classify_pairs(200, preset("POWER", 200, 2), s, 2, F(1, 2))
    assert rep.borderline == ()
