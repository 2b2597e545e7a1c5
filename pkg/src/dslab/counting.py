"""The solution counter ``S_k(alpha, Q)`` and the mass ``Psi_k(Q)``."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

import numpy as np

from dslab.arith import FactorSieve
from dslab.psi import WeightTable

DYADIC_BITS = 53


@dataclass(frozen=True)
class SolutionCount:
    count: int
    witnesses: tuple[tuple[tuple[int, ...], int], ...] | None = None


def _candidate(q: int, n: int, d: int, u: int, v: int) -> int | None:
    """The unique ``a`` with ``|q n/d - a| < u/v`` and ``gcd(a, q) = 1``, if any."""
    a = (2 * q * n + d) // (2 * d)
    if v * abs(q * n - a * d) < u * d and gcd(a, q) == 1:
        return a
    return None


def count_solutions(alpha: Sequence, Q: int, psi: WeightTable, sieve: FactorSieve,
                    record_witnesses: bool = False) -> SolutionCount:
    """Count ``(a, q)``, ``q <= Q``, with every ``a_i`` coprime to q and ``|q alpha_i - a_i| < psi(q)``."""
    if Q > psi.Q or Q > sieve.limit:
        raise ValueError(f"Q={Q} exceeds psi support bound {psi.Q} or sieve limit {sieve.limit}")
    coords = []
    for x in alpha:
        x = Fraction(x)
        if not 0 <= x <= 1:
            raise ValueError(f"coordinate {x} outside [0, 1]")
        coords.append((x.numerator, x.denominator))
    count = 0
    witnesses = [] if record_witnesses else None
    for q in psi.support():
        if q > Q:
            break
        w = psi[q]
        u, v = w.numerator, w.denominator
        found = []
        for n, d in coords:
            a = _candidate(q, n, d, u, v)
            if a is None:
                break
            found.append(a)
        else:
            count += 1
            if witnesses is not None:
                witnesses.append((tuple(found), q))
    return SolutionCount(count, None if witnesses is None else tuple(witnesses))


def count_solutions_dyadic(m: np.ndarray, Q: int, psi: WeightTable) -> np.ndarray:
    """Vectorized counter for points with coordinates ``m / 2**53``.

    ``m`` has shape ``(n, k)`` and dtype uint64 with entries below ``2**53``.
    Same test as :func:`count_solutions`, carried out in 64-bit integers: the
    product ``q m`` is split at bit 26 so nothing overflows for ``Q < 2**30``.
    """
    if Q >= 1 << 30:
        raise ValueError("Q too large for the 64-bit dyadic counter")
    m = np.asarray(m, dtype=np.int64)
    n_pts, k = m.shape
    scale = 1 << DYADIC_BITS
    half = 1 << (DYADIC_BITS - 1)
    hi = m >> 26
    lo = m & ((1 << 26) - 1)
    counts = np.zeros(n_pts, dtype=np.int64)
    for q in psi.support():
        if q > Q:
            break
        w = psi[q]
        # dist < w * 2^53 iff dist < ceil(w * 2^53) for integer dist
        thresh = -((-w.numerator * scale) // w.denominator)
        ok = np.ones(n_pts, dtype=bool)
        for i in range(k):
            x = q * hi[:, i] + ((q * lo[:, i]) >> 26)
            # x = floor(q m / 2^26); frac = (q m) mod 2^53
            frac = ((x & ((1 << 27) - 1)) << 26) + ((q * lo[:, i]) & ((1 << 26) - 1))
            floor_ = x >> 27
            up = frac >= half
            a = floor_ + up
            dist = np.where(up, scale - frac, frac)
            ok &= (dist < thresh) & (np.gcd(a, q) == 1)
        counts += ok
    return counts


def psi_mass(Q: int, psi: WeightTable, sieve: FactorSieve, k: int = 1) -> Fraction:
    """``Psi_k(Q) = sum_{q <= Q} (2 psi(q) phi(q) / q) ** k``."""
    if Q > psi.Q or Q > sieve.limit:
        raise ValueError(f"Q={Q} exceeds psi support bound {psi.Q} or sieve limit {sieve.limit}")
    return sum(((2 * psi[q] * sieve.phi[q] / q) ** k for q in psi.support() if q <= Q), Fraction(0))
