"""High-precision helpers for the transcendental factors.

Exact quantities stay :class:`~fractions.Fraction`; logs, exponentials and
fractional powers go through private mpmath contexts so global mpmath state
is left alone.  Threshold tests use interval arithmetic (outward rounding) and
report ``None`` when the enclosure straddles the comparison point.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
from mpmath.ctx_iv import MPIntervalContext

PREC_BITS = 192
DIGITS = 50

mp = mpmath.MPContext()
mp.prec = PREC_BITS
iv = MPIntervalContext()
iv.prec = PREC_BITS


def mpf(x):
    if isinstance(x, Fraction):
        return mp.mpf(x.numerator) / x.denominator
    return mp.mpf(x)


def ivf(x):
    x = Fraction(x)
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def power(x, e):
    """``x ** e`` for rational x >= 0 and rational e, as an mpf."""
    x, e = Fraction(x), Fraction(e)
    if x == 0:
        return mp.mpf(0) if e > 0 else mp.mpf(1)
    if e.denominator == 1:
        return mpf(x ** int(e))
    return mp.power(mpf(x), mpf(e))


def exp(x):
    return mp.exp(mpf(Fraction(x)))


def log(x):
    return mp.log(mpf(Fraction(x)))


def compare_int_log(w: int, coef, z) -> int | None:
    """Sign of ``w - coef * log(z)`` for integer w, rational coef and z > 0.

    ``log(z)`` is irrational unless ``z == 1``, so equality only happens in
    that case; an unresolved enclosure returns None.
    """
    coef, z = Fraction(coef), Fraction(z)
    if z <= 0:
        raise ValueError("log argument must be positive")
    if coef == 0 or z == 1:
        return (w > 0) - (w < 0)
    x = ivf(coef) * iv.log(ivf(z))
    if w > x.b:
        return 1
    if w < x.a:
        return -1
    return None


def ceil_log_threshold(coef, z) -> int:
    """Smallest integer ``n`` with ``n >= coef * log(z)``."""
    coef, z = Fraction(coef), Fraction(z)
    if coef == 0 or z == 1:
        return 0
    x = ivf(coef) * iv.log(ivf(z))
    lo = math.ceil(mp.mpf(x.a.a))
    if lo >= x.b:
        return int(lo)
    raise ArithmeticError(f"cannot resolve ceil({coef} * log({z})) at {PREC_BITS} bits")


def to_str(x) -> str:
    return mp.nstr(x, DIGITS)
