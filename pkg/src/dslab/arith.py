"""Sieved multiplicative arithmetic and per-pair statistics.

Everything here is exact: integers and :class:`fractions.Fraction` only.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from dslab.psi import PsiTable


@dataclass(frozen=True)
class FactorSieve:
    """Smallest-prime-factor and totient tables for ``1 <= n <= limit``.

    ``spf[n]`` is 0 for ``n < 2``.
    """

    limit: int
    spf: tuple[int, ...]
    phi: tuple[int, ...]

    def factorize(self, n: int) -> tuple[tuple[int, int], ...]:
        """Return ``((p, e), ...)`` with ascending primes."""
        if not 1 <= n <= self.limit:
            raise ValueError(f"{n} outside sieve range 1..{self.limit}")
        out = []
        spf = self.spf
        while n > 1:
            p = spf[n]
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return tuple(out)

    def primes_of(self, n: int) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factorize(n))

    def is_prime(self, n: int) -> bool:
        return 2 <= n <= self.limit and self.spf[n] == n

    def primes(self) -> list[int]:
        return [n for n in range(2, self.limit + 1) if self.spf[n] == n]


def build_sieve(N: int) -> FactorSieve:
    """Linear sieve producing spf and phi up to ``N`` in O(N)."""
    if not isinstance(N, int) or N < 1:
        raise ValueError(f"sieve limit must be a positive integer, got {N!r}")
    spf = [0] * (N + 1)
    phi = [0] * (N + 1)
    phi[1] = 1
    primes: list[int] = []
    for i in range(2, N + 1):
        if spf[i] == 0:
            spf[i] = i
            phi[i] = i - 1
            primes.append(i)
        si = spf[i]
        for p in primes:
            m = i * p
            if p > si or m > N:
                break
            spf[m] = p
            # p <= spf(i): p | i means phi multiplies by p, else by p - 1
            phi[m] = phi[i] * p if p == si else phi[i] * (p - 1)
    return FactorSieve(limit=N, spf=tuple(spf), phi=tuple(phi))


@dataclass(frozen=True)
class PairArithProfile:
    q: int
    r: int
    g: int
    l: int
    core: int
    core_primes: tuple[int, ...]


def pair_profile(q: int, r: int, sieve: FactorSieve) -> PairArithProfile:
    """Profile of ``(q, r)``; the core ``qr/(q,r)^2`` is factored via its two cofactors."""
    if q < 1 or r < 1:
        raise ValueError("q and r must be positive")
    if q > sieve.limit or r > sieve.limit:
        raise ValueError(f"pair ({q}, {r}) exceeds sieve limit {sieve.limit}")
    g = gcd(q, r)
    qc, rc = q // g, r // g
    primes = sorted(set(sieve.primes_of(qc)) | set(sieve.primes_of(rc)))
    return PairArithProfile(q=q, r=r, g=g, l=q * rc, core=qc * rc, core_primes=tuple(primes))


def small_prime_count(profile: PairArithProfile, t) -> int:
    """Number of core primes ``p <= t``."""
    return sum(1 for p in profile.core_primes if p <= t)


def large_prime_sum(profile: PairArithProfile, t) -> Fraction:
    """Exact sum of ``1/p`` over core primes ``p > t``."""
    total = Fraction(0)
    for p in profile.core_primes:
        if p > t:
            total += Fraction(1, p)
    return total


def dilation(profile: PairArithProfile, psi: "PsiTable", theta: "PsiTable | None" = None) -> Fraction:
    """``max(r psi(q), q theta(r)) / gcd(q, r)``; ``theta`` defaults to ``psi``."""
    if theta is None:
        theta = psi
    q, r = profile.q, profile.r
    return max(r * psi[q], q * theta[r]) / profile.g


omega_t = small_prime_count
L_t = large_prime_sum
D_of = dilation
