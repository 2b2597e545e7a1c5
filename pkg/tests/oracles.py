"""Slow, independent reference implementations used to freeze expected values.

Nothing here touches the sieve, the interval engine or the overlap formula.
"""

from fractions import Fraction
from itertools import product
from math import gcd


def phi(n):
    return sum(1 for a in range(1, n + 1) if gcd(a, n) == 1)


def union_parts(q, psi_q):
    """A_q as a list of (lo, hi) Fractions, overlaps merged, clipped to [0, 1]."""
    raw = []
    rad = Fraction(psi_q) / q
    for a in range(q + 1):
        if gcd(a, q) != 1 or rad == 0:
            continue
        c = Fraction(a, q)
        raw.append((max(Fraction(0), c - rad), min(Fraction(1), c + rad)))
    raw.sort()
    out = []
    for lo, hi in raw:
        if out and lo < out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def length(parts):
    return sum((hi - lo for lo, hi in parts), Fraction(0))


def overlap(q, r, psi):
    tot = Fraction(0)
    for a, b in union_parts(q, psi(q)):
        for c, d in union_parts(r, psi(r)):
            lo, hi = max(a, c), min(b, d)
            if hi > lo:
                tot += hi - lo
    return tot


def count(alpha, Q, psi):
    """Solutions (a, q) by scanning every numerator 0..q in every coordinate."""
    n = 0
    for q in range(1, Q + 1):
        p = Fraction(psi(q))
        ok = True
        for x in alpha:
            if not any(gcd(a, q) == 1 and abs(q * Fraction(x) - a) < p for a in range(q + 1)):
                ok = False
                break
        n += ok
    return n


def exact_variance(Q, psi, k):
    mass = [length(union_parts(q, psi(q))) ** k for q in range(1, Q + 1)]
    Psi = sum(mass, Fraction(0))
    second = Psi + 2 * sum(overlap(q, r, psi) ** k
                           for q in range(1, Q + 1) for r in range(q + 1, Q + 1))
    return Psi, second, second - Psi * Psi


def divisor_sum(n, k):
    return sum(Fraction(phi(d) ** k, d ** (k - 1)) for d in range(1, n + 1) if n % d == 0)


def prop_lhs(Q, psi, k, keep):
    """Ordered-pair weighted sum over (q, r) accepted by keep(q, r)."""
    w = {q: (Fraction(phi(q)) * psi(q) / q) ** k for q in range(1, Q + 1)}
    return sum((w[q] * w[r] for q, r in product(range(1, Q + 1), repeat=2) if keep(q, r)), Fraction(0))


def prime_factors(n):
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out
