import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from dslab.approx_sets import (IntervalUnion, OverlapEngine, _progression_mass, build_Aq,
                               closed_form_mass, intersect, measure, member_k, pair_overlap_mass_k)
from dslab.psi import PsiTable, preset

PRESETS = [("CONST", F(1, 2)), ("CONST", F(1, 4)), ("CONST", F(1, 8)), ("CONST", F(3, 7)),
           ("POWER", 2), ("POWER", 3), ("PRIMES_ONLY", None), ("CLUSTER", 60), ("CLUSTER", 6)]


def const(c, Q=20):
    return preset("CONST", Q, F(c))


def test_build_Aq_examples(sieve):
    a1 = build_Aq(1, const(F(1, 4)), sieve)
    assert a1.parts == ((0, F(1, 4)), (F(3, 4), 1))
    assert a1.contains(0) and a1.contains(1) and not a1.contains(F(1, 4))
    a4 = build_Aq(4, const(F(1, 8)), sieve)
    assert a4.parts == ((F(7, 32), F(9, 32)), (F(23, 32), F(25, 32)))
    assert measure(a4) == F(1, 8)
    a6 = build_Aq(6, const(F(1, 4)), sieve)
    assert a6.parts == ((F(3, 24), F(5, 24)), (F(19, 24), F(21, 24)))
    assert measure(a6) == F(1, 6)


def test_measure_examples():
    assert measure(IntervalUnion.empty()) == 0
    assert measure(IntervalUnion.from_parts([(0, 1)])) == 1


def test_intersect_examples(sieve):
    q = const(F(1, 4))
    u = intersect(build_Aq(2, q, sieve), build_Aq(3, q, sieve))
    assert u.parts == ((F(3, 8), F(5, 12)), (F(7, 12), F(5, 8)))
    assert measure(u) == F(1, 12)
    assert not intersect(u, IntervalUnion.empty())
    e = const(F(1, 8))
    assert not intersect(build_Aq(2, e, sieve), build_Aq(3, e, sieve))


def test_touching_parts_stay_separate(sieve):
    a1 = build_Aq(1, const(F(1, 2)), sieve)
    assert len(a1) == 2 and not a1.contains(F(1, 2))
    u = IntervalUnion.from_parts([(F(1, 3), F(1, 2)), (0, F(1, 3)), (F(1, 4), F(3, 10))])
    assert u.parts == ((0, F(1, 3)), (F(1, 3), F(1, 2)))
    assert not u.contains(F(1, 3)) and u.contains(0)


def test_closed_form_mass_examples(sieve):
    assert closed_form_mass(1, const(F(1, 4)), sieve) == F(1, 2)
    assert closed_form_mass(4, const(F(1, 8)), sieve, k=2) == F(1, 64)
    assert closed_form_mass(6, const(F(1, 4)), sieve, k=3) == F(1, 216)


@pytest.mark.parametrize("name,param", PRESETS)
def test_measure_matches_closed_form_and_brute_force(name, param, sieve):
    psi = preset(name, 150, param)
    for q in range(1, 151):
        m = measure(build_Aq(q, psi, sieve))
        assert m == closed_form_mass(q, psi, sieve)
        if q <= 40:
            assert m == oracles.length(oracles.union_parts(q, psi[q]))


def test_pair_overlap_examples(sieve):
    q = const(F(1, 4))
    assert pair_overlap_mass_k(2, 3, q, sieve) == F(1, 12)
    assert pair_overlap_mass_k(2, 3, q, sieve, k=2) == F(1, 144)
    for r in range(1, 15):
        assert pair_overlap_mass_k(r, r, q, sieve, k=2) == closed_form_mass(r, q, sieve, k=2)


@pytest.mark.parametrize("name,param", PRESETS)
def test_overlap_engine_matches_interval_intersection(name, param, sieve):
    psi = preset(name, 60, param)
    eng = OverlapEngine(psi, sieve)
    A = [None] + [build_Aq(q, psi, sieve) for q in range(1, 61)]
    for q in range(1, 61):
        for r in range(q, 61):
            exact = measure(intersect(A[q], A[r]))
            assert eng.overlap(q, r) == exact, (q, r)
            n, d = eng.overlap_scaled(q, r, shortcut=False)
            assert F(n, d) == exact


def test_overlap_engine_against_brute_force_small(sieve):
    psi = preset("CLUSTER", 24, 6)
    eng = OverlapEngine(psi, sieve)
    for q in range(1, 25):
        for r in range(q + 1, 25):
            assert eng.overlap(q, r) == oracles.overlap(q, r, psi.__getitem__)


def test_progression_mass_matches_direct_sum():
    for S in range(1, 30):
        for M in range(1, S + 1):
            for u in range(1, 9):
                direct = 0
                j = 0
                while S - j * u > 0 or j == 0:
                    w = min(M, max(0, S - j * u))
                    direct += w if j == 0 else 2 * w
                    j += 1
                    if S - j * u <= 0:
                        break
                assert _progression_mass(S, M, u) == direct, (S, M, u)


def test_member_examples(sieve):
    q = const(F(1, 4))
    assert member_k([F(1, 2)], 2, q, sieve)
    assert not member_k([F(1, 4)], 2, q, sieve)
    assert member_k([F(1, 3), F(2, 3)], 3, const(F(1, 10)), sieve)


def test_member_agrees_with_interval_containment(sieve):
    rng = random.Random(20260101)
    psis = [preset(n, 200, p) for n, p in PRESETS]
    cache = {}
    for _ in range(10_000):
        i = rng.randrange(len(psis))
        q = rng.randint(1, 200)
        den = rng.randint(1, 400)
        x = F(rng.randint(0, den), den)
        key = (i, q)
        if key not in cache:
            cache[key] = build_Aq(q, psis[i], sieve)
        assert member_k([x], q, psis[i], sieve) == cache[key].contains(x), (i, q, x)


def test_member_on_interval_endpoints(sieve):
    psi = preset("POWER", 50, 2)
    for q in range(1, 51):
        A = build_Aq(q, psi, sieve)
        for lo, hi in A.parts:
            for x in (lo, hi, (lo + hi) / 2):
                assert member_k([x], q, psi, sieve) == A.contains(x)


@settings(max_examples=200)
@given(st.lists(st.tuples(st.fractions(0, 1), st.fractions(0, 1)), max_size=6),
       st.lists(st.tuples(st.fractions(0, 1), st.fractions(0, 1)), max_size=6),
       st.fractions(0, 1))
def test_intersect_is_pointwise_and(a, b, x):
    u = IntervalUnion.from_parts([tuple(sorted(p)) for p in a])
    v = IntervalUnion.from_parts([tuple(sorted(p)) for p in b])
    w = intersect(u, v)
    assert w.contains(x) == (u.contains(x) and v.contains(x))
    assert measure(w) <= min(measure(u), measure(v))
    assert intersect(u, v) == intersect(v, u)


def test_rejects_out_of_range(sieve):
    psi = PsiTable(3, (F(1, 4),) * 3)
    with pytest.raises(ValueError):
        build_Aq(4, psi, sieve)
    with pytest.raises(ValueError):
        member_k([F(1, 2)], 4, psi, sieve)
