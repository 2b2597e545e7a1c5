"""Ratio reports for the overlap lemmas and the bilinear pair-sum inequalities.

None of the inequalities checked here comes with an explicit constant, so a
check never passes or fails on its own: it reports ``lhs`` (exact),
``rhs_main`` (the stated right-hand side without the implicit constant) and
their ratio.  Boundedness of the ratio across problem sizes is what the test
suite looks at.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

from dslab import hp
from dslab.approx_sets import OverlapEngine
from dslab.arith import FactorSieve, pair_profile, large_prime_sum, small_prime_count
from dslab.counting import psi_mass
from dslab.errors import InvariantViolation
from dslab.psi import WeightTable

E_KIND, F_KIND = "E_tK", "F_tK"
PV, KMY = "PV", "KMY"


@dataclass(frozen=True)
class WeightFunctionSpec:
    """``f(n) = phi(n)**k / n**(k-1)``."""

    k: int

    def __call__(self, n: int, sieve: FactorSieve) -> Fraction:
        return Fraction(sieve.phi[n] ** self.k, n ** (self.k - 1))


@dataclass(frozen=True)
class BilinearWeights:
    psi: WeightTable
    theta: WeightTable
    f: WeightFunctionSpec
    g: WeightFunctionSpec


@dataclass(frozen=True)
class PairClassSet:
    kind: str
    t: Fraction
    K: Fraction
    pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class BoundReport:
    lhs: Fraction
    rhs_main: object
    ratio: object
    params: dict
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DivisorBoundResult:
    k: int
    N: int
    ok: bool
    worst_ratio: Fraction
    worst_n: int
    equality_count: int


def _report(lhs: Fraction, rhs, params: dict, meta: dict | None = None) -> BoundReport:
    if lhs == 0:
        ratio = hp.mp.mpf(0)
    elif rhs == 0:
        ratio = hp.mp.inf
    else:
        ratio = hp.mpf(lhs) / rhs
    return BoundReport(lhs, rhs, ratio, params, meta or {})


def verify_divisor_bound(f: WeightFunctionSpec | int, N: int, sieve: FactorSieve) -> DivisorBoundResult:
    """Check ``sum_{d | n} f(d) <= n`` for all ``n <= N``.

    Multiplied through by ``n**(k-1)`` the sum is an integer, accumulated by
    a divisor-multiple sweep.
    """
    k = f.k if isinstance(f, WeightFunctionSpec) else int(f)
    if N > sieve.limit:
        raise ValueError(f"N={N} exceeds sieve limit {sieve.limit}")
    phi = sieve.phi
    acc = [0] * (N + 1)
    for d in range(1, N + 1):
        fd = phi[d] ** k
        for mult, m in enumerate(range(d, N + 1, d), start=1):
            acc[m] += fd * mult ** (k - 1)
    ok = True
    worst_n, worst = 1, (acc[1], 1)
    eq = 0
    for n in range(1, N + 1):
        lhs, rhs = acc[n], n**k
        if lhs > rhs:
            ok = False
        if lhs == rhs:
            eq += 1
        # ratio lhs / rhs against the running maximum, cross-multiplied
        if lhs * worst[1] > worst[0] * rhs:
            worst, worst_n = (lhs, rhs), n
    return DivisorBoundResult(k, N, ok, Fraction(*worst), worst_n, eq)


def mu_value(weights: WeightTable, f: WeightFunctionSpec, v: int, sieve: FactorSieve) -> Fraction:
    return f(v, sieve) * weights[v] / v


def mu_sum(weights: BilinearWeights, side: str, sieve: FactorSieve) -> Fraction:
    """``sum_{v in supp} f(v) psi(v) / v`` for side ``"V"`` (psi, f) or ``"W"`` (theta, g)."""
    table, fn = _side(weights, side)
    return sum((mu_value(table, fn, v, sieve) for v in table.support()), Fraction(0))


def _side(weights: BilinearWeights, side: str):
    if side == "V":
        return weights.psi, weights.f
    if side == "W":
        return weights.theta, weights.g
    raise ValueError(f"side must be 'V' or 'W', got {side!r}")


def mu_pair_sum(weights: BilinearWeights, pairs: PairClassSet | Sequence[tuple[int, int]],
                sieve: FactorSieve) -> Fraction:
    items = pairs.pairs if isinstance(pairs, PairClassSet) else pairs
    mv: dict[int, Fraction] = {}
    mw: dict[int, Fraction] = {}
    total = Fraction(0)
    for v, w in items:
        if v not in mv:
            mv[v] = mu_value(weights.psi, weights.f, v, sieve)
        if w not in mw:
            mw[w] = mu_value(weights.theta, weights.g, w, sieve)
        total += mv[v] * mw[w]
    return total


def two_table_dilation(v: int, w: int, psi: WeightTable, theta: WeightTable) -> Fraction:
    return max(w * psi[v], v * theta[w]) / gcd(v, w)


def build_class_set(weights: BilinearWeights, t, K, kind: str, sieve: FactorSieve) -> PairClassSet:
    """All ``(v, w)`` in ``supp psi x supp theta`` with dilation ``<= 1`` and the L/omega threshold."""
    t, K = Fraction(t), Fraction(K)
    if t < 1:
        raise ValueError("t must be >= 1")
    if kind not in (E_KIND, F_KIND):
        raise ValueError(f"kind must be {E_KIND} or {F_KIND}")
    out = []
    for v in weights.psi.support():
        for w in weights.theta.support():
            if two_table_dilation(v, w, weights.psi, weights.theta) > 1:
                continue
            prof = pair_profile(v, w, sieve)
            stat = large_prime_sum(prof, t) if kind == E_KIND else small_prime_count(prof, t)
            if stat >= K:
                out.append((v, w))
    return PairClassSet(kind, t, K, tuple(out))


def check_lemma_31(weights: BilinearWeights, t, K, epsilon, sieve: FactorSieve,
                   pairs: PairClassSet | None = None) -> BoundReport:
    """Ratio of ``mu(E)`` to ``(mu(V) mu(W) e^{-K t})^{1/2 + eps}``."""
    t, K, epsilon = Fraction(t), Fraction(K), Fraction(epsilon)
    if not 0 < epsilon <= Fraction(2, 5):
        raise ValueError("epsilon must lie in (0, 2/5]")
    if pairs is None:
        pairs = build_class_set(weights, t, K, E_KIND, sieve)
    lhs = mu_pair_sum(weights, pairs, sieve)
    base = hp.mpf(mu_sum(weights, "V", sieve) * mu_sum(weights, "W", sieve)) * hp.exp(-K * t)
    rhs = hp.mp.power(base, hp.mpf(Fraction(1, 2) + epsilon))
    return _report(lhs, rhs, {"t": t, "K": K, "epsilon": epsilon},
                   {"pairs": len(pairs.pairs), "front_constant": "1000^P(eps)"})


def check_lemma_32(weights: BilinearWeights, t, K, epsilon, C, sieve: FactorSieve,
                   pairs: PairClassSet | None = None) -> BoundReport:
    """Ratio of ``mu(F)`` to ``(mu(V) mu(W) e^{-C K})^{1/2 + eps}``; the Log-t factor goes to meta."""
    t, K, epsilon, C = Fraction(t), Fraction(K), Fraction(epsilon), Fraction(C)
    if not 0 < epsilon <= Fraction(2, 5):
        raise ValueError("epsilon must lie in (0, 2/5]")
    if C <= 0:
        raise ValueError("C must be positive")
    if pairs is None:
        pairs = build_class_set(weights, t, K, F_KIND, sieve)
    lhs = mu_pair_sum(weights, pairs, sieve)
    base = hp.mpf(mu_sum(weights, "V", sieve) * mu_sum(weights, "W", sieve)) * hp.exp(-C * K)
    rhs = hp.mp.power(base, hp.mpf(Fraction(1, 2) + epsilon))
    expo = (hp.exp(40 * C) - 1) / 2
    log_t = hp.log(t)
    meta = {
        "pairs": len(pairs.pairs),
        "front_constant": "(100e^C)^P(eps,C)",
        "log_power_exponent": expo,
        "log_power_plain": hp.mp.power(log_t, expo),
        "log_power_max1": hp.mp.power(max(log_t, hp.mp.mpf(1)), expo),
    }
    return _report(lhs, rhs, {"t": t, "K": K, "epsilon": epsilon, "C": C}, meta)


# -- the three pair-sum propositions ------------------------------------------

def _core_primes(fq, fr) -> list[int]:
    dq, dr = dict(fq), dict(fr)
    return sorted(p for p in dq.keys() | dr.keys() if dq.get(p, 0) != dr.get(p, 0))


def _prop_lhs(Q: int, psi: WeightTable, sieve: FactorSieve, k: int, ys: Sequence[Fraction],
              keep=None) -> list[Fraction]:
    """``sum (phi psi / q)^k (phi psi / r)^k`` over ordered pairs with ``D <= y``, for each y.

    ``keep(core_primes)`` filters pairs further; the diagonal has no core primes.
    """
    if Q > psi.Q or Q > sieve.limit:
        raise ValueError(f"Q={Q} exceeds psi support bound {psi.Q} or sieve limit {sieve.limit}")
    ys = [Fraction(y) for y in ys]
    order = sorted(range(len(ys)), key=lambda i: ys[i])
    sorted_y = [ys[i] for i in order]
    base = lcm(*range(1, Q + 1)) * lcm(1, *(psi[q].denominator for q in range(1, Q + 1)))
    support = [q for q in psi.support() if q <= Q]
    W = {}
    for q in support:
        x = sieve.phi[q] * psi[q] / q
        W[q] = (x.numerator * (base // x.denominator)) ** k
    fac = {q: sieve.factorize(q) for q in support}
    buckets = [0] * (len(ys) + 1)
    for ir, r in enumerate(support):
        for q in support[: ir + 1]:
            D = max(r * psi[q], q * psi[r]) / gcd(q, r)
            slot = bisect.bisect_left(sorted_y, D)
            if slot == len(ys):
                continue
            if keep is not None and not keep(_core_primes(fac[q], fac[r]) if q != r else []):
                continue
            buckets[slot] += W[q] * W[r] * (1 if q == r else 2)
    out = [Fraction(0)] * len(ys)
    running = 0
    den = base ** (2 * k)
    for slot, i in enumerate(order):
        running += buckets[slot]
        out[i] = Fraction(running, den)
    return out


def _prop_reports(lhs_list, ys, Q, psi, sieve, k, epsilon, extra_factor, params) -> list[BoundReport]:
    mass = psi_mass(Q, psi, sieve, k)
    grow = hp.power(mass, 1 + epsilon)
    out = []
    for lhs, y in zip(lhs_list, ys):
        rhs = hp.power(y, 1 - epsilon) * grow * extra_factor
        out.append(_report(lhs, rhs, dict(params, Q=Q, k=k, epsilon=epsilon, y=Fraction(y)),
                           {"psi_mass": mass}))
    return out


def _check_common(epsilon, ys):
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    ys = [Fraction(y) for y in ys]
    if any(y < 1 for y in ys):
        raise ValueError("y must be >= 1")
    return epsilon, ys


def prop_1_ladder(Q, psi, sieve, k, epsilon, ys) -> list[BoundReport]:
    epsilon, ys = _check_common(epsilon, ys)
    lhs = _prop_lhs(Q, psi, sieve, k, ys)
    return _prop_reports(lhs, ys, Q, psi, sieve, k, epsilon, 1, {})


def prop_2_ladder(Q, psi, sieve, k, epsilon, ys, t, s, C) -> list[BoundReport]:
    """Pairs with ``L_t >= 1/s``; right-hand side gains ``e^{-C t / s}``."""
    epsilon, ys = _check_common(epsilon, ys)
    t, s, C = Fraction(t), Fraction(s), Fraction(C)
    if t < 1 or s < 1 or C < 1:
        raise ValueError("t, s and C must be >= 1")
    cut = 1 / s

    def keep(core):
        total = Fraction(0)
        for p in core:
            if p > t:
                total += Fraction(1, p)
        return total >= cut

    lhs = _prop_lhs(Q, psi, sieve, k, ys, keep)
    return _prop_reports(lhs, ys, Q, psi, sieve, k, epsilon, hp.exp(-C * t / s), {"t": t, "s": s, "C": C})


def prop_3_ladder(Q, psi, sieve, k, epsilon, ys, t, kappa, C) -> list[BoundReport]:
    """Pairs with ``omega_t >= kappa log t``; right-hand side gains ``t^{-C}``."""
    epsilon, ys = _check_common(epsilon, ys)
    t, kappa, C = Fraction(t), Fraction(kappa), Fraction(C)
    if t < 1 or kappa <= 0 or C < 1:
        raise ValueError("need t >= 1, kappa > 0, C >= 1")
    # omega is an integer, so the log threshold reduces to its ceiling
    need = hp.ceil_log_threshold(kappa, t)

    def keep(core):
        return sum(1 for p in core if p <= t) >= need

    lhs = _prop_lhs(Q, psi, sieve, k, ys, keep)
    return _prop_reports(lhs, ys, Q, psi, sieve, k, epsilon, hp.power(t, -C),
                         {"t": t, "kappa": kappa, "C": C, "omega_needed": need})


def check_prop_1(Q, psi, sieve, k, epsilon, y) -> BoundReport:
    return prop_1_ladder(Q, psi, sieve, k, epsilon, [y])[0]


def check_prop_2(Q, psi, sieve, k, epsilon, y, t, s, C) -> BoundReport:
    return prop_2_ladder(Q, psi, sieve, k, epsilon, [y], t, s, C)[0]


def check_prop_3(Q, psi, sieve, k, epsilon, y, t, kappa, C) -> BoundReport:
    return prop_3_ladder(Q, psi, sieve, k, epsilon, [y], t, kappa, C)[0]


# -- per-pair overlap lemmas ----------------------------------------------------

def check_overlap_lemma(q: int, r: int, psi: WeightTable, sieve: FactorSieve, k: int = 1, t=1,
                        variant: str = PV, engine: OverlapEngine | None = None) -> BoundReport:
    """Overlap against ``m_q m_r e^{k L_D}`` (PV) or ``m_q m_r e^{2k L_t}`` (KMY).

    Raises :class:`InvariantViolation` if a pair with ``D < 1/2`` overlaps.
    """
    if q == r:
        raise ValueError("overlap lemmas need q != r")
    if variant not in (PV, KMY):
        raise ValueError(f"variant must be {PV} or {KMY}")
    t = Fraction(t)
    if t < 1:
        raise ValueError("t must be >= 1")
    if engine is None or max(q, r) > engine.Q:
        engine = OverlapEngine(psi, sieve, max(q, r))
    prof = pair_profile(q, r, sieve)
    D = max(r * psi[q], q * psi[r]) / prof.g
    num, den = engine.overlap_scaled(q, r, shortcut=False)
    lhs = Fraction(num, den) ** k
    params = {"q": q, "r": r, "k": k, "variant": variant, "D": D}
    if 2 * D < 1:
        if lhs:
            raise InvariantViolation(f"pair ({q}, {r}) has D={D} < 1/2 but overlap {lhs}")
        return BoundReport(lhs, hp.mp.mpf(0), hp.mp.mpf(0), params, {"disjoint": True})
    prod = hp.mpf((engine.mass(q) * engine.mass(r)) ** k)
    if variant == PV:
        rhs = prod * hp.exp(k * large_prime_sum(prof, D))
        return _report(lhs, rhs, params, {"disjoint": False})
    params["t"] = t
    rhs = prod * hp.exp(2 * k * large_prime_sum(prof, t))
    err = hp.mp.power(2, k * small_prime_count(prof, t)) * hp.log(4 * D) / hp.mpf(D)
    return _report(lhs, rhs, params, {"disjoint": False, "error_magnitude": err})


@dataclass(frozen=True)
class OverlapSweepReport:
    Q: int
    k: int
    variant: str
    pairs: int
    disjoint_pairs: int
    max_ratio: object
    argmax: tuple[int, int] | None


def overlap_sweep(Q: int, psi: WeightTable, sieve: FactorSieve, k: int = 1, variant: str = PV,
                  t=1) -> OverlapSweepReport:
    """Every pair ``q < r <= Q``: disjointness below ``D = 1/2`` and the largest ratio above it."""
    engine = OverlapEngine(psi, sieve, Q)
    best = hp.mp.mpf(0)
    arg = None
    zero = 0
    n = 0
    for r in range(2, Q + 1):
        for q in range(1, r):
            n += 1
            rep = check_overlap_lemma(q, r, psi, sieve, k, t, variant, engine)
            if rep.meta.get("disjoint"):
                zero += 1
            elif rep.ratio > best:
                best, arg = rep.ratio, (q, r)
    return OverlapSweepReport(Q, k, variant, n, zero, best, arg)
