"""Exact and Monte Carlo second-moment experiments for ``S_k(alpha, Q)``.

The exact sweep visits every pair ``q < r <= Q`` once.  Pair overlaps are
rationals with denominators dividing ``lcm(1..Q) * B**2`` (``B`` the lcm of
the psi denominators), so each term is rescaled to that common denominator
and summed as a plain integer; partial sums from any number of workers add
up to the same integer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

import numpy as np

from dslab import hp
from dslab._parallel import pmap
from dslab.approx_sets import OverlapEngine, _pair_data
from dslab.arith import FactorSieve
from dslab.counting import DYADIC_BITS, count_solutions_dyadic, psi_mass
from dslab.errors import InvariantViolation
from dslab.psi import WeightTable

DEFAULT_PAIR_BUDGET = 4096
SAMPLER_BLOCK = 1 << 16

DISJOINT, E1, E2, E3 = "DISJOINT", "E1", "E2", "E3"
CLASSES = (DISJOINT, E1, E2, E3)


class BudgetError(ValueError):
    pass


class AuditMismatch(InvariantViolation):
    """Partition masses failed to reconcile with the exact variance sweep."""


@dataclass(frozen=True)
class VarianceReport:
    Q: int
    k: int
    psi_mass: Fraction
    overlap_sum: Fraction
    variance: Fraction
    excess: Fraction


@dataclass(frozen=True)
class MonteCarloReport:
    Q: int
    k: int
    samples: int
    seed: int
    sample_mean: Fraction
    sample_variance: Fraction
    variance_se: object  # mpf; normal-approximation standard error of sample_variance
    psi_mass: Fraction
    mean_error: Fraction


@dataclass(frozen=True)
class PartitionReport:
    Q: int
    k: int
    epsilon: Fraction
    psi_mass: Fraction
    I: int
    counts: dict
    mass_by_class: dict
    overlap_by_class: dict
    dyadic_R: tuple
    dyadic_R_tail: object
    dyadic_mass: tuple
    dyadic_tail_mass: Fraction
    e2_buckets: dict
    e3_buckets: dict
    e3_condition_failures: int
    borderline: tuple
    class_of: dict = field(repr=False, compare=False)


@dataclass(frozen=True)
class AuditRecord:
    Q: int
    k: int
    diagonal: Fraction
    overlap_by_class: dict
    reconstructed: Fraction
    overlap_sum: Fraction
    ratios: dict
    borderline: int


def _common_scale(Q: int, psi: WeightTable) -> tuple[int, int]:
    """``(base, scale)``: masses have denominators dividing base, pair overlaps dividing scale."""
    B = lcm(1, *(psi[q].denominator for q in range(1, Q + 1)))
    base = lcm(*range(1, Q + 1)) * B
    return base, base * B


def _check_budget(Q: int, psi: WeightTable, sieve: FactorSieve, budget: int):
    if Q < 1:
        raise ValueError("Q must be positive")
    if Q > budget:
        raise BudgetError(f"Q={Q} exceeds the pair-sweep budget of {budget}")
    if Q > psi.Q or Q > sieve.limit:
        raise ValueError(f"Q={Q} exceeds psi support bound {psi.Q} or sieve limit {sieve.limit}")


# -- exact variance ---------------------------------------------------------

_STATE: dict = {}


def _init_sweep(psi, sieve, Q, k, extra=None):
    engine = OverlapEngine(psi, sieve, Q)
    base, scale = _common_scale(Q, psi)
    _STATE.clear()
    _STATE.update(engine=engine, base=base, scale=scale, k=k, Q=Q, extra=extra or {})


def _variance_row(r: int) -> tuple[int, int]:
    eng, scale, k = _STATE["engine"], _STATE["scale"], _STATE["k"]
    num, den = eng.overlap_scaled(r, r)
    diag = (num * (scale // den)) ** k
    off = 0
    for q in range(1, r):
        num, den = eng.overlap_scaled(q, r)
        if num:
            off += (num * (scale // den)) ** k
    return diag, off


def variance_ladder(Qs: Sequence[int], psi: WeightTable, sieve: FactorSieve, k: int = 1,
                    threads=1, budget: int = DEFAULT_PAIR_BUDGET) -> list[VarianceReport]:
    """Exact reports for every Q in ``Qs`` from a single sweep up to ``max(Qs)``."""
    Qs = sorted(set(Qs))
    top = Qs[-1]
    _check_budget(top, psi, sieve, budget)
    if k < 1:
        raise ValueError("k must be positive")
    rows = pmap(_variance_row, range(1, top + 1), threads, _init_sweep, (psi, sieve, top, k))
    _, scale = _common_scale(top, psi)
    denom = scale**k
    out = []
    diag = total = 0
    want = iter(Qs)
    nxt = next(want)
    for r, (d, off) in enumerate(rows, start=1):
        diag += d
        total += d + 2 * off
        if r == nxt:
            mass = Fraction(diag, denom)
            overlap_sum = Fraction(total, denom)
            var = overlap_sum - mass * mass
            out.append(VarianceReport(r, k, mass, overlap_sum, var, var - mass))
            nxt = next(want, None)
    return out


def exact_variance(Q: int, psi: WeightTable, sieve: FactorSieve, k: int = 1, threads=1,
                   budget: int = DEFAULT_PAIR_BUDGET) -> VarianceReport:
    """``int (S_k - Psi_k)^2 = sum_{q,r <= Q} lambda_k(A_q^k & A_r^k) - Psi_k(Q)^2``, exactly."""
    return variance_ladder([Q], psi, sieve, k, threads, budget)[0]


def dyadic_ladder(Q: int) -> list[int]:
    out = []
    x = 1
    while x < Q:
        out.append(x)
        x *= 2
    out.append(Q)
    return out


# -- Monte Carlo --------------------------------------------------------------

def sample_block(seed: int, block: int, size: int, k: int) -> np.ndarray:
    """Numerators ``m`` (points ``m / 2**53``) for one sampler block.

    Philox4x64 keyed by the seed with the block index in the top counter
    word; sample ``i`` of the block takes draws ``i*k .. i*k + k - 1``.
    """
    bg = np.random.Philox(key=seed, counter=[0, 0, 0, block])
    raw = bg.random_raw(size * k).reshape(size, k)
    return (raw >> np.uint64(64 - DYADIC_BITS)).astype(np.int64)


def sample_points(seed: int, n: int, k: int, start: int = 0) -> np.ndarray:
    """Samples ``start .. start + n - 1`` as an ``(n, k)`` array of 53-bit numerators."""
    out = []
    i = start
    end = start + n
    while i < end:
        b, off = divmod(i, SAMPLER_BLOCK)
        take = min(SAMPLER_BLOCK - off, end - i)
        out.append(sample_block(seed, b, SAMPLER_BLOCK, k)[off:off + take])
        i += take
    return np.concatenate(out) if out else np.zeros((0, k), dtype=np.int64)


def _mc_block(args) -> tuple[int, int, int, int]:
    b, size = args
    st = _STATE
    m = sample_block(st["seed"], b, SAMPLER_BLOCK, st["k"])[:size]
    c = count_solutions_dyadic(m, st["Q"], st["psi"]).astype(object)
    return int(c.sum()), int((c**2).sum()), int((c**3).sum()), int((c**4).sum())


def _init_mc(psi, Q, k, seed):
    _STATE.clear()
    _STATE.update(psi=psi, Q=Q, k=k, seed=seed)


def monte_carlo(Q: int, psi: WeightTable, sieve: FactorSieve, k: int, n: int, seed: int,
                threads=1) -> MonteCarloReport:
    """Mean and unbiased variance of ``S_k(alpha, Q)`` over ``n`` seeded uniform points."""
    if n < 2:
        raise ValueError("Monte Carlo needs at least 2 samples")
    if not 0 <= seed < 1 << 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    if Q > psi.Q or Q > sieve.limit:
        raise ValueError(f"Q={Q} exceeds psi support bound {psi.Q} or sieve limit {sieve.limit}")
    blocks = [(b, min(SAMPLER_BLOCK, n - b * SAMPLER_BLOCK)) for b in range(-(-n // SAMPLER_BLOCK))]
    parts = pmap(_mc_block, blocks, threads, _init_mc, (psi, Q, k, seed))
    s1, s2, s3, s4 = (sum(p[i] for p in parts) for i in range(4))
    mean = Fraction(s1, n)
    var = Fraction(n * s2 - s1 * s1, n * (n - 1))
    # central fourth moment from raw power sums
    m2 = Fraction(s2, n) - mean**2
    m4 = Fraction(s4, n) - 4 * mean * Fraction(s3, n) + 6 * mean**2 * Fraction(s2, n) - 3 * mean**4
    se = hp.mp.sqrt(hp.mpf(max(m4 - m2 * m2, Fraction(0)) / n))
    mass = psi_mass(Q, psi, sieve, k)
    return MonteCarloReport(Q, k, n, seed, mean, var, se, mass, abs(mean - mass))


# -- partition of the off-diagonal pairs ------------------------------------

def _dyadic_index(D: Fraction) -> int:
    """The ``i`` with ``2**(i-1) <= D < 2**i``."""
    n, d = D.numerator, D.denominator
    e = n.bit_length() - d.bit_length()
    # now 2**(e-1) < D < 2**(e+1)
    if (n << max(0, -e)) < (d << max(0, e)):
        e -= 1
    return e + 1


def _large_sum(core: Sequence[int], t: Fraction) -> Fraction:
    tn, td = t.numerator, t.denominator
    total = Fraction(0)
    for p in core:
        if p * td > tn:
            total += Fraction(1, p)
    return total


def _small_count(core: Sequence[int], t: Fraction) -> int:
    tn, td = t.numerator, t.denominator
    return sum(1 for p in core if p * td <= tn)


def _classify_row(r: int) -> dict:
    st = _STATE
    eng, base, scale, k = st["engine"], st["base"], st["scale"], st["k"]
    eps, I = st["extra"]["epsilon"], st["extra"]["I"]
    psi = eng.psi
    c_e1 = eps / (4 * k)
    c_e3 = eps / (8 * k)
    out = {
        "counts": dict.fromkeys(CLASSES, 0), "mass": dict.fromkeys(CLASSES, 0),
        "overlap": dict.fromkeys(CLASSES, 0), "R": {}, "Rmass": {}, "e2": {}, "e3": {},
        "e3_fail": 0, "borderline": [], "class_of": [],
    }
    mr = eng.mass(r)
    Mr = mr.numerator * (base // mr.denominator)
    for q in range(1, r):
        mq = eng.mass(q)
        Mq = mq.numerator * (base // mq.denominator)
        prod = (Mq * Mr) ** k
        if not psi[q] or not psi[r]:
            cls = DISJOINT
        else:
            D = max(r * psi[q], q * psi[r]) / gcd(q, r)
            if 2 * D < 1:
                cls = DISJOINT
            else:
                _, core, _ = _pair_data(eng._factors[q], eng._factors[r])
                D2 = D * D
                L = _large_sum(core, D2)
                if L * D > 1:
                    cls = E2
                else:
                    w = _small_count(core, D2)
                    sgn = hp.compare_int_log(w, c_e1, 2 * D)
                    if sgn is None:
                        out["borderline"].append((q, r))
                        # orientation as written: equality belongs to E1
                        sgn = 0
                    cls = E3 if sgn > 0 else E1
                i = _dyadic_index(D)
                if cls == E1:
                    weight = hp.mpf(Fraction(prod, base ** (2 * k))) * hp.power(D, -1 + eps / 2)
                    key = i if i <= I else "tail"
                    out["R"][key] = out["R"].get(key, 0) + weight
                    out["Rmass"][key] = out["Rmass"].get(key, 0) + prod
                elif cls == E2:
                    j = i
                    while _large_sum(core, Fraction(4) ** (j - 1)) > 1:
                        j += 1
                    out["e2"][(i, j)] = out["e2"].get((i, j), 0) + prod
                else:
                    out["e3"][i] = out["e3"].get(i, 0) + prod
                    w4 = _small_count(core, Fraction(4) ** i)
                    s = hp.compare_int_log(w4, c_e3, Fraction(4) ** i)
                    if s is None:
                        out["borderline"].append((q, r))
                    elif s <= 0:
                        out["e3_fail"] += 1
        # DISJOINT pairs are recomputed without the D < 1/2 early exit
        num, den = eng.overlap_scaled(q, r, shortcut=cls != DISJOINT)
        out["counts"][cls] += 1
        out["mass"][cls] += prod
        if num:
            out["overlap"][cls] += (num * (scale // den)) ** k
        out["class_of"].append((q, cls))
    # raw (sign, mantissa, exponent, bits) tuples pickle across processes; mpf from a private context does not
    out["R"] = {key: v._mpf_ for key, v in out["R"].items()}
    return out


def classify_pairs(Q: int, psi: WeightTable, sieve: FactorSieve, k: int, epsilon,
                   threads=1, budget: int = DEFAULT_PAIR_BUDGET) -> PartitionReport:
    """Sort all pairs ``q < r <= Q`` into DISJOINT / E1 / E2 / E3 with dyadic bucket masses.

    Masses are over unordered pairs; the ordered sum in the variance is twice
    that.  Each row is reduced on its own and rows are combined in order, so
    the high-precision bucket sums do not depend on the worker count.
    """
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    _check_budget(Q, psi, sieve, budget)
    mass = psi_mass(Q, psi, sieve, k)
    I = 0
    while 2**I < mass:
        I += 1
    rows = pmap(_classify_row, range(1, Q + 1), threads, _init_sweep,
                (psi, sieve, Q, k, {"epsilon": epsilon, "I": I}))
    base, scale = _common_scale(Q, psi)
    mden = base ** (2 * k)
    oden = scale**k
    counts = dict.fromkeys(CLASSES, 0)
    mass_acc = dict.fromkeys(CLASSES, 0)
    ov_acc = dict.fromkeys(CLASSES, 0)
    R = [hp.mp.mpf(0)] * (I + 1)
    Rm = [0] * (I + 1)
    R_tail, Rm_tail = hp.mp.mpf(0), 0
    e2: dict = {}
    e3: dict = {}
    fails = 0
    border = []
    class_of = {}
    for r, row in enumerate(rows, start=1):
        for c in CLASSES:
            counts[c] += row["counts"][c]
            mass_acc[c] += row["mass"][c]
            ov_acc[c] += row["overlap"][c]
        for key in sorted(row["R"], key=str):
            v = hp.mp.make_mpf(row["R"][key])
            if key == "tail":
                R_tail += v
                Rm_tail += row["Rmass"][key]
            else:
                R[key] += v
                Rm[key] += row["Rmass"][key]
        for key, v in row["e2"].items():
            e2[key] = e2.get(key, 0) + v
        for key, v in row["e3"].items():
            e3[key] = e3.get(key, 0) + v
        fails += row["e3_fail"]
        border.extend(row["borderline"])
        for q, c in row["class_of"]:
            class_of[(q, r)] = c
    return PartitionReport(
        Q=Q, k=k, epsilon=epsilon, psi_mass=mass, I=I, counts=counts,
        mass_by_class={c: Fraction(v, mden) for c, v in mass_acc.items()},
        overlap_by_class={c: Fraction(v, oden) for c, v in ov_acc.items()},
        dyadic_R=tuple(R), dyadic_R_tail=R_tail,
        dyadic_mass=tuple(Fraction(v, mden) for v in Rm), dyadic_tail_mass=Fraction(Rm_tail, mden),
        e2_buckets={key: Fraction(e2[key], mden) for key in sorted(e2)},
        e3_buckets={key: Fraction(e3[key], mden) for key in sorted(e3)},
        e3_condition_failures=fails, borderline=tuple(border), class_of=class_of,
    )


def partition_audit(report: PartitionReport, vreport: VarianceReport) -> AuditRecord:
    """Check ``diagonal + 2 * sum(class overlaps) == overlap_sum`` exactly."""
    if (report.Q, report.k) != (vreport.Q, vreport.k):
        raise ValueError("partition and variance reports describe different runs")
    if report.psi_mass != vreport.psi_mass:
        raise AuditMismatch("psi mass differs between partition and variance reports")
    off = sum(report.overlap_by_class.values(), Fraction(0))
    rebuilt = vreport.psi_mass + 2 * off
    if rebuilt != vreport.overlap_sum:
        raise AuditMismatch(f"partition rebuilds overlap sum {rebuilt}, sweep gave {vreport.overlap_sum}")
    if report.overlap_by_class[DISJOINT] != 0:
        raise AuditMismatch("DISJOINT pairs carry nonzero overlap")
    denom = hp.power(vreport.psi_mass, 1 + report.epsilon) if vreport.psi_mass else None
    ratios = {c: (hp.mpf(2 * v) / denom if denom else hp.mp.mpf(0))
              for c, v in report.overlap_by_class.items()}
    return AuditRecord(report.Q, report.k, vreport.psi_mass, dict(report.overlap_by_class),
                       rebuilt, vreport.overlap_sum, ratios, len(report.borderline))
