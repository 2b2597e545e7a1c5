"""Approximation sets ``A_q`` as exact rational interval unions.

An :class:`IntervalUnion` is an open subset of ``[0, 1]`` in the relative
topology: a part whose left end is 0 contains 0, a part whose right end is 1
contains 1, every other endpoint is excluded.  ``A_q`` is always of this form
(only ``q = 1`` reaches the boundary, through clipping).

Two routes compute ``lambda(A_q & A_r)``: :func:`intersect` on materialized
unions, and :class:`OverlapEngine`, which counts coprime residue pairs at each
separation and never builds the sets.  Tests pin one against the other.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

from dslab.arith import FactorSieve
from dslab.psi import WeightTable


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted parts ``(ends[2i], ends[2i+1]) / den``.

    Normal form: ``den`` coprime to the gcd of all ends, ``lo < hi`` for every
    part and ``hi_i <= lo_{i+1}``.  Parts that touch are kept apart because the
    shared point is not in the set; the parts are then exactly the connected
    components, so equal sets have equal representations.
    """

    den: int
    ends: tuple[int, ...]

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(1, ())

    @classmethod
    def from_ints(cls, den: int, pairs) -> "IntervalUnion":
        """Normalize arbitrary ``(lo, hi)`` integer pairs over ``den``; clips to ``[0, den]``."""
        spans = sorted((max(lo, 0), min(hi, den)) for lo, hi in pairs)
        merged: list[int] = []
        for lo, hi in spans:
            if lo >= hi:
                continue
            if merged and lo < merged[-1]:
                if hi > merged[-1]:
                    merged[-1] = hi
            else:
                merged.extend((lo, hi))
        return cls._reduced(den, merged)

    @classmethod
    def from_parts(cls, parts: Sequence[tuple]) -> "IntervalUnion":
        fr = [(Fraction(lo), Fraction(hi)) for lo, hi in parts]
        den = lcm(1, *(x.denominator for pair in fr for x in pair))
        return cls.from_ints(den, [(lo.numerator * (den // lo.denominator), hi.numerator * (den // hi.denominator)) for lo, hi in fr])

    @classmethod
    def _reduced(cls, den: int, ends) -> "IntervalUnion":
        if not ends:
            return cls.empty()
        c = gcd(den, *ends)
        if c > 1:
            return cls(den // c, tuple(e // c for e in ends))
        return cls(den, tuple(ends))

    @property
    def parts(self) -> tuple[tuple[Fraction, Fraction], ...]:
        e, d = self.ends, self.den
        return tuple((Fraction(e[i], d), Fraction(e[i + 1], d)) for i in range(0, len(e), 2))

    def __len__(self) -> int:
        return len(self.ends) // 2

    def __bool__(self) -> bool:
        return bool(self.ends)

    def contains(self, x) -> bool:
        x = Fraction(x)
        if not 0 <= x <= 1:
            return False
        num = x.numerator * self.den
        dx = x.denominator
        ends = self.ends
        # ends are integers, so comparing against floor(x * den) suffices
        i = bisect.bisect_right(ends, num // dx)
        if i % 2:
            lo = ends[i - 1]
            return lo * dx < num or lo == 0
        return i > 0 and ends[i - 1] == self.den and num == self.den * dx


def measure(u: IntervalUnion) -> Fraction:
    e = u.ends
    return Fraction(sum(e[1::2]) - sum(e[0::2]), u.den)


def intersect(u: IntervalUnion, v: IntervalUnion) -> IntervalUnion:
    """Exact intersection by a linear merge over both part sequences."""
    if not u or not v:
        return IntervalUnion.empty()
    den = lcm(u.den, v.den)
    su, sv = den // u.den, den // v.den
    a = [x * su for x in u.ends]
    b = [x * sv for x in v.ends]
    out: list[int] = []
    i = j = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        lo = a[i] if a[i] > b[j] else b[j]
        hi = a[i + 1] if a[i + 1] < b[j + 1] else b[j + 1]
        if lo < hi:
            out.append(lo)
            out.append(hi)
        if a[i + 1] < b[j + 1]:
            i += 2
        else:
            j += 2
    return IntervalUnion._reduced(den, out)


def build_Aq(q: int, psi: WeightTable, sieve: FactorSieve) -> IntervalUnion:
    """Union of ``((a - psi(q))/q, (a + psi(q))/q)`` over ``0 <= a <= q`` coprime to q, clipped to [0, 1]."""
    if not 1 <= q <= psi.Q:
        raise ValueError(f"q={q} outside psi support bound 1..{psi.Q}")
    if q > sieve.limit:
        raise ValueError(f"q={q} exceeds sieve limit {sieve.limit}")
    w = psi[q]
    if not w:
        return IntervalUnion.empty()
    u, v = w.numerator, w.denominator
    pairs = [(a * v - u, a * v + u) for a in range(q + 1) if gcd(a, q) == 1]
    return IntervalUnion.from_ints(q * v, pairs)


def closed_form_mass(q: int, psi: WeightTable, sieve: FactorSieve, k: int = 1) -> Fraction:
    """``(2 psi(q) phi(q) / q) ** k``."""
    if not 1 <= q <= psi.Q:
        raise ValueError(f"q={q} outside psi support bound 1..{psi.Q}")
    return (2 * psi[q] * sieve.phi[q] / q) ** k


def member_k(alpha: Sequence, q: int, psi: WeightTable, sieve: FactorSieve) -> bool:
    """Is ``alpha`` in ``A_q^k``?  Decided per coordinate from the nearest integer to ``q alpha_i``."""
    if not 1 <= q <= min(psi.Q, sieve.limit):
        raise ValueError(f"q={q} out of range")
    w = psi[q]
    u, v = w.numerator, w.denominator
    if not u:
        return False
    for x in alpha:
        x = Fraction(x)
        n, d = x.numerator, x.denominator
        if not 0 <= n <= d:
            return False
        a = (2 * q * n + d) // (2 * d)
        if v * abs(q * n - a * d) >= u * d or gcd(a, q) != 1:
            return False
    return True


def _pair_data(factors_q, factors_r):
    """Split the primes of ``lcm(q, r)`` into core primes and balanced primes.

    Returns ``(c0, core, balanced)`` where ``c0`` is the product of the local
    unit counts that do not depend on the residue ``h``.
    """
    fq = dict(factors_q)
    fr = dict(factors_r)
    c0 = 1
    core = []
    balanced = []
    for p in fq.keys() | fr.keys():
        a = fq.get(p, 0)
        b = fr.get(p, 0)
        if a != b:
            m = a if a < b else b
            if m:
                c0 *= p ** (m - 1) * (p - 1)
            core.append(p)
        else:
            c0 *= p ** (a - 1)
            balanced.append(p)
    return c0, core, balanced


def _progression_mass(S: int, M: int, u: int) -> int:
    """``sum over integer j`` of ``min(M, max(0, S - |j| u))``, for ``1 <= M <= S``."""
    J1 = (S - M) // u
    J2 = (S - 1) // u
    tail = (J2 - J1) * S - u * (J2 * (J2 + 1) - J1 * (J1 + 1)) // 2
    return M + 2 * (M * J1 + tail)


class OverlapEngine:
    """Exact ``lambda(A_q & A_r)`` without materializing the sets.

    The number of coprime residue pairs ``(a, b)`` with ``a r' - b q' = h``
    (mod ``lcm``) is a product of local factors: ``phi(p^min) [p does not divide h]``
    at primes of the core, ``p^(e-1) (p - 2 + [p | h])`` at primes dividing
    ``q`` and ``r`` to the same power.  Expanding both brackets over divisors
    turns the overlap into sums of a trapezoid profile over arithmetic
    progressions, which have closed forms.
    """

    def __init__(self, psi: WeightTable, sieve: FactorSieve, Q: int | None = None):
        Q = psi.Q if Q is None else Q
        if Q > sieve.limit or Q > psi.Q:
            raise ValueError(f"Q={Q} exceeds psi support or sieve limit")
        self.Q = Q
        self.psi = psi
        self.sieve = sieve
        self._factors = [()] + [sieve.factorize(n) for n in range(1, Q + 1)]
        self._num = [0] + [psi[q].numerator for q in range(1, Q + 1)]
        self._den = [1] + [psi[q].denominator for q in range(1, Q + 1)]

    def mass(self, q: int) -> Fraction:
        return Fraction(2 * self._num[q] * self.sieve.phi[q], q * self._den[q])

    def overlap_scaled(self, q: int, r: int, shortcut: bool = True) -> tuple[int, int]:
        """``(num, den)`` with ``lambda(A_q & A_r) = num / den``; not reduced.

        With ``shortcut`` off, pairs with ``D < 1/2`` go through the full
        formula instead of returning 0 up front.
        """
        if q == r:
            return 2 * self._num[q] * self.sieve.phi[q], q * self._den[q]
        a1, a2 = self._num[q], self._num[r]
        if not a1 or not a2:
            return 0, 1
        b1, b2 = self._den[q], self._den[r]
        g = gcd(q, r)
        l = q // g * r
        ub = b1 * b2
        Sd = a1 * b2 * (l // q)
        Se = a2 * b1 * (l // r)
        if shortcut and 2 * max(Sd, Se) < ub:
            return 0, 1
        S = Sd + Se
        M = 2 * (Sd if Sd < Se else Se)
        c0, core, balanced = _pair_data(self._factors[q], self._factors[r])
        terms = [(1, 1)]
        for p in core:
            terms += [(n * p, -w) for n, w in terms]
        for p in balanced:
            terms = [(n, w * (p - 2)) for n, w in terms] + [(n * p, w) for n, w in terms]
        total = 0
        for n, w in terms:
            if w:
                u = n * ub
                total += w * (M if u >= S else _progression_mass(S, M, u))
        return c0 * total, l * ub

    def overlap(self, q: int, r: int) -> Fraction:
        num, den = self.overlap_scaled(q, r)
        return Fraction(num, den)


def pair_overlap_mass_k(q: int, r: int, psi: WeightTable, sieve: FactorSieve, k: int = 1,
                        engine: OverlapEngine | None = None) -> Fraction:
    """``lambda_k(A_q^k & A_r^k) = lambda(A_q & A_r) ** k`` (product sets)."""
    if not (1 <= q <= psi.Q and 1 <= r <= psi.Q):
        raise ValueError(f"pair ({q}, {r}) outside psi support bound {psi.Q}")
    if engine is None or max(q, r) > engine.Q:
        engine = OverlapEngine(psi, sieve, max(q, r))
    return engine.overlap(q, r) ** k
