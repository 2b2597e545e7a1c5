"""Approximation functions as finitely supported exact rational tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from pathlib import Path

PRESETS = ("CONST", "POWER", "PRIMES_ONLY", "CLUSTER")

HALF = Fraction(1, 2)


class PsiFormatError(ValueError):
    """Malformed psi table text; ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class WeightTable:
    """Nonnegative rational weights on ``1..Q``, implicitly zero elsewhere."""

    Q: int
    values: tuple[Fraction, ...]
    _support: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.Q < 1:
            raise ValueError("support bound Q must be positive")
        if len(self.values) != self.Q:
            raise ValueError(f"expected {self.Q} values, got {len(self.values)}")
        for q, v in enumerate(self.values, start=1):
            if v < 0:
                raise ValueError(f"weight at q={q} is negative: {v}")
        object.__setattr__(self, "_support", tuple(q for q, v in enumerate(self.values, 1) if v))

    def __getitem__(self, q: int) -> Fraction:
        if 1 <= q <= self.Q:
            return self.values[q - 1]
        return Fraction(0)

    def support(self) -> tuple[int, ...]:
        return self._support

    def truncate(self, Q: int) -> "WeightTable":
        return type(self)(Q, self.values[:Q])


class PsiTable(WeightTable):
    """Weight table whose values lie in ``[0, 1/2]``."""

    def __post_init__(self):
        super().__post_init__()
        for q, v in enumerate(self.values, start=1):
            if v > HALF:
                raise ValueError(f"psi({q}) = {v} exceeds 1/2")

    @classmethod
    def from_function(cls, Q: int, fn) -> "PsiTable":
        return cls(Q, tuple(Fraction(fn(q)) for q in range(1, Q + 1)))


def rescale(psi: WeightTable, k: int, y) -> WeightTable:
    """The table ``q -> psi(q)^k / y``; may exceed 1/2, hence a plain WeightTable."""
    y = Fraction(y)
    if y < 1:
        raise ValueError("rescaling factor y must be >= 1")
    return WeightTable(psi.Q, tuple(v**k / y for v in psi.values))


def _iroot_ceil(n: int, e: int) -> int:
    """Smallest m with m**e >= n."""
    m = int(round(n ** (1.0 / e)))
    while m**e < n:
        m += 1
    while m > 1 and (m - 1) ** e >= n:
        m -= 1
    return m


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def preset(name: str, Q: int, param=None) -> PsiTable:
    """Build a shipped preset on ``1..Q``.

    CONST(c)        psi = c, 0 <= c <= 1/2 (default 1/2)
    POWER(e)        psi(q) = min(1/2, 1/ceil(q^(1/e))) (default e = 1)
    PRIMES_ONLY(c)  psi(p) = c on primes, 0 elsewhere (default 1/2)
    CLUSTER(M)      psi(q) = gcd(q, M) / (2M), so 1/2 exactly on multiples of M (default 60)
    """
    name = name.upper()
    if name == "CONST":
        c = HALF if param is None else Fraction(param)
        if not 0 <= c <= HALF:
            raise ValueError(f"CONST parameter must lie in [0, 1/2], got {c}")
        return PsiTable(Q, (c,) * Q)
    if name == "POWER":
        e = 1 if param is None else Fraction(param)
        if e.denominator != 1 or e < 1:
            raise ValueError(f"POWER exponent must be a positive integer, got {e}")
        e = int(e)
        return PsiTable.from_function(Q, lambda q: min(HALF, Fraction(1, _iroot_ceil(q, e))))
    if name == "PRIMES_ONLY":
        c = HALF if param is None else Fraction(param)
        if not 0 <= c <= HALF:
            raise ValueError(f"PRIMES_ONLY parameter must lie in [0, 1/2], got {c}")
        return PsiTable.from_function(Q, lambda q: c if _is_prime(q) else 0)
    if name == "CLUSTER":
        M = 60 if param is None else Fraction(param)
        if M.denominator != 1 or M < 1:
            raise ValueError(f"CLUSTER modulus must be a positive integer, got {M}")
        M = int(M)
        return PsiTable.from_function(Q, lambda q: Fraction(gcd(q, M), 2 * M))
    raise ValueError(f"unknown psi preset {name!r}; expected one of {', '.join(PRESETS)}")


def parse_preset_spec(spec: str) -> tuple[str, Fraction | None]:
    """Split ``"NAME[:param]"``."""
    name, _, raw = spec.partition(":")
    name = name.strip().upper()
    if name not in PRESETS and name != "FILE":
        raise ValueError(f"unknown psi preset {name!r}; expected one of {', '.join(PRESETS)} or FILE")
    if not raw:
        return name, None
    try:
        return name, Fraction(raw.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad preset parameter {raw!r}: {exc}") from None


def loads(text: str) -> PsiTable:
    """Parse the ``Q=<int>`` / ``q num/den`` text format."""
    Q = None
    values: dict[int, Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if Q is None:
            if not line.startswith("Q="):
                raise PsiFormatError("expected header 'Q=<int>'", lineno)
            try:
                Q = int(line[2:])
            except ValueError:
                raise PsiFormatError(f"bad support bound {line[2:]!r}", lineno) from None
            if Q < 1:
                raise PsiFormatError("support bound must be positive", lineno)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PsiFormatError(f"expected 'q numerator/denominator', got {line!r}", lineno)
        try:
            q = int(parts[0])
            num, sep, den = parts[1].partition("/")
            v = Fraction(int(num), int(den)) if sep else Fraction(int(num))
        except (ValueError, ZeroDivisionError):
            raise PsiFormatError(f"cannot parse {line!r}", lineno) from None
        if not 1 <= q <= Q:
            raise PsiFormatError(f"q={q} outside 1..{Q}", lineno)
        if q in values:
            raise PsiFormatError(f"duplicate entry for q={q}", lineno)
        if not 0 <= v <= HALF:
            raise PsiFormatError(f"psi({q}) = {v} outside [0, 1/2]", lineno)
        values[q] = v
    if Q is None:
        raise PsiFormatError("missing header 'Q=<int>'")
    return PsiTable(Q, tuple(values.get(q, Fraction(0)) for q in range(1, Q + 1)))


def dumps(psi: WeightTable) -> str:
    lines = [f"Q={psi.Q}"]
    for q in psi.support():
        v = psi[q]
        lines.append(f"{q} {v.numerator}/{v.denominator}")
    return "\n".join(lines) + "\n"


def load(path) -> PsiTable:
    return loads(Path(path).read_text())
