"""Command-line entry point: ``dslab {measure,variance,montecarlo,bounds,replay}``.

Exit codes: 0 success, 1 validation error, 2 invariant violation, 3 I/O error.
"""

from __future__ import annotations

import sys
import time
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from pathlib import Path

import click

from dslab import bounds, psi as psimod, variance
from dslab.approx_sets import build_Aq, closed_form_mass, measure
from dslab.arith import build_sieve
from dslab.errors import InvariantViolation
from dslab.reporting import ReportEnvelope, partition_record, record, to_csv

EXIT_OK, EXIT_VALIDATION, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3

BOUND_SUBCOMMANDS = ("prop1", "prop2", "prop3", "lemma31", "lemma32", "overlap-sweep")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    Q: int = 100
    k: int = 1
    epsilon: Fraction = Fraction(1, 2)
    psi_preset: str = "CONST"
    psi_param: Fraction | None = None
    psi_file: str | None = None
    seed: int = 0
    samples: int = 10_000
    out: str | None = None
    threads: str = "1"
    subcommand: str | None = None
    y: Fraction = Fraction(1)
    t: Fraction = Fraction(1)
    s: Fraction = Fraction(1)
    C: Fraction = Fraction(1)
    kappa: Fraction = Fraction(1, 20)
    K: Fraction = Fraction(0)
    variant: str = bounds.PV

    def echo(self) -> dict:
        """Config as recorded in the envelope; threads and out do not affect results."""
        return asdict(self)

    @classmethod
    def from_echo(cls, d: dict) -> "ExperimentConfig":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


class ValidationError(ValueError):
    pass


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.Q < 1:
        raise ValidationError("--Q must be a positive integer")
    if cfg.k < 1:
        raise ValidationError("--k must be a positive integer")
    if not 0 < cfg.epsilon < 1:
        raise ValidationError("--epsilon must lie strictly between 0 and 1")
    if cfg.psi_preset == "FILE" and not cfg.psi_file:
        raise ValidationError("--psi FILE requires --psi-file")
    if not 0 <= cfg.seed < 1 << 64:
        raise ValidationError("--seed must be a 64-bit unsigned integer")
    if cfg.command == "montecarlo" and cfg.samples < 2:
        raise ValidationError("--samples must be at least 2")
    if cfg.command == "bounds" and cfg.subcommand not in BOUND_SUBCOMMANDS:
        raise ValidationError(f"bounds subcommand must be one of {', '.join(BOUND_SUBCOMMANDS)}")
    if cfg.variant not in (bounds.PV, bounds.KMY):
        raise ValidationError("--variant must be PV or KMY")
    str(cfg.threads).upper() == "AUTO" or _positive_int(cfg.threads, "--threads")
    return cfg


def _positive_int(v, flag):
    try:
        n = int(v)
    except (TypeError, ValueError):
        raise ValidationError(f"{flag} must be a positive integer or AUTO") from None
    if n < 1:
        raise ValidationError(f"{flag} must be a positive integer or AUTO")
    return n


def load_psi(cfg: ExperimentConfig) -> psimod.PsiTable:
    if cfg.psi_preset == "FILE":
        text = Path(cfg.psi_file).read_text()
        table = psimod.loads(text)
        if table.Q < cfg.Q:
            raise ValidationError(f"psi file supports q <= {table.Q}, but --Q is {cfg.Q}")
        return table.truncate(cfg.Q)
    try:
        return psimod.preset(cfg.psi_preset, cfg.Q, cfg.psi_param)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


# -- commands ---------------------------------------------------------------

def cmd_measure(cfg: ExperimentConfig):
    psi = load_psi(cfg)
    sieve = build_sieve(cfg.Q)
    rows = []
    for q in range(1, cfg.Q + 1):
        exact = measure(build_Aq(q, psi, sieve))
        closed = closed_form_mass(q, psi, sieve)
        rows.append({"record": "measure_row", "q": q, "measure": exact, "closed_form": closed,
                     "equal": exact == closed})
    bad = [r["q"] for r in rows if not r["equal"]]
    rows.append({"record": "measure_summary", "rows": len(rows), "mismatches": bad})
    series = to_csv(rows[:-1], ["q", "measure", "closed_form", "equal"])
    failure = InvariantViolation(f"measure differs from closed form at q={bad}") if bad else None
    return rows, series, failure


def cmd_variance(cfg: ExperimentConfig):
    psi = load_psi(cfg)
    sieve = build_sieve(cfg.Q)
    ladder = variance.variance_ladder(variance.dyadic_ladder(cfg.Q), psi, sieve, cfg.k, cfg.threads)
    vrep = ladder[-1]
    prep = variance.classify_pairs(cfg.Q, psi, sieve, cfg.k, cfg.epsilon, cfg.threads)
    audit = variance.partition_audit(prep, vrep)
    recs = [record("variance", vrep), partition_record(prep), record("audit", audit)]
    series = [{"Q": r.Q, "psi_mass": r.psi_mass, "variance": r.variance,
               "psi_mass_float": float(r.psi_mass), "variance_float": float(r.variance)} for r in ladder]
    recs += [dict(record="series", **row) for row in series]
    return recs, to_csv(series, list(series[0])), None


def cmd_montecarlo(cfg: ExperimentConfig):
    psi = load_psi(cfg)
    sieve = build_sieve(cfg.Q)
    rep = variance.monte_carlo(cfg.Q, psi, sieve, cfg.k, cfg.samples, cfg.seed, cfg.threads)
    return [record("montecarlo", rep)], None, None


def cmd_bounds(cfg: ExperimentConfig):
    psi = load_psi(cfg)
    sieve = build_sieve(cfg.Q)
    sub, Q, k, eps = cfg.subcommand, cfg.Q, cfg.k, cfg.epsilon
    if sub == "prop1":
        rep = bounds.check_prop_1(Q, psi, sieve, k, eps, cfg.y)
    elif sub == "prop2":
        rep = bounds.check_prop_2(Q, psi, sieve, k, eps, cfg.y, cfg.t, cfg.s, cfg.C)
    elif sub == "prop3":
        rep = bounds.check_prop_3(Q, psi, sieve, k, eps, cfg.y, cfg.t, cfg.kappa, cfg.C)
    elif sub in ("lemma31", "lemma32"):
        tilde = psimod.rescale(psi, k, cfg.y)
        f = bounds.WeightFunctionSpec(k)
        w = bounds.BilinearWeights(tilde, tilde, f, f)
        if sub == "lemma31":
            rep = bounds.check_lemma_31(w, cfg.t, cfg.K, eps, sieve)
        else:
            rep = bounds.check_lemma_32(w, cfg.t, cfg.K, eps, cfg.C, sieve)
    else:
        rep = bounds.overlap_sweep(Q, psi, sieve, k, cfg.variant, cfg.t)
        return [record("overlap_sweep", rep)], None, None
    return [record(sub, rep)], None, None


COMMANDS = {"measure": cmd_measure, "variance": cmd_variance,
            "montecarlo": cmd_montecarlo, "bounds": cmd_bounds}


def run(cfg: ExperimentConfig) -> tuple[ReportEnvelope, str | None, Exception | None]:
    """Execute a validated config; returns the envelope, optional CSV text and any failure."""
    cfg = validate(cfg)
    start = time.perf_counter()
    try:
        payload, series, failure = COMMANDS[cfg.command](cfg)
    except InvariantViolation:
        raise
    except ValueError as exc:  # parameter checks inside the library, including the pair budget
        raise ValidationError(str(exc)) from None
    env = ReportEnvelope(cfg.command, cfg.echo(), payload, round(time.perf_counter() - start, 6))
    return env, series, failure


def execute(cfg: ExperimentConfig) -> int:
    try:
        env, series, failure = run(cfg)
    except (ValidationError, psimod.PsiFormatError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_VALIDATION
    except InvariantViolation as exc:
        click.echo(f"invariant violation: {exc}", err=True)
        return EXIT_INVARIANT
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        return EXIT_IO
    text = env.dumps()
    try:
        if cfg.out:
            out = Path(cfg.out)
            out.write_text(text)
            if series is not None:
                out.with_suffix(".csv").write_text(series)
        else:
            click.echo(text, nl=False)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        return EXIT_IO
    if failure is not None:
        click.echo(f"invariant violation: {failure}", err=True)
        return EXIT_INVARIANT
    return EXIT_OK


# -- click surface ------------------------------------------------------------

class RationalParam(click.ParamType):
    name = "rational"

    def convert(self, value, param, ctx):
        if isinstance(value, Fraction):
            return value
        try:
            return Fraction(str(value))
        except (ValueError, ZeroDivisionError):
            self.fail(f"{value!r} is not a rational number", param, ctx)


RATIONAL = RationalParam()


def common_options(fn):
    opts = [
        click.option("--Q", "Q", type=int, default=100, show_default=True, help="Largest denominator q."),
        click.option("--k", "k", type=int, default=1, show_default=True, help="Dimension."),
        click.option("--epsilon", type=RATIONAL, default="1/2", show_default=True),
        click.option("--psi", "psi", default="CONST:1/2", show_default=True,
                     help="Preset CONST|POWER|PRIMES_ONLY|CLUSTER[:param], or FILE."),
        click.option("--psi-file", type=click.Path(dir_okay=False), default=None),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--samples", type=int, default=10_000, show_default=True),
        click.option("--threads", default="1", show_default=True, help="Worker processes or AUTO."),
        click.option("--out", type=click.Path(dir_okay=False), default=None,
                     help="Write records here (CSV series next to it); stdout otherwise."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _config(command, Q, k, epsilon, psi, psi_file, seed, samples, threads, out, **extra):
    name, param = psimod.parse_preset_spec(psi)
    if psi_file and name != "FILE":
        name, param = "FILE", None
    return ExperimentConfig(command=command, Q=Q, k=k, epsilon=epsilon, psi_preset=name,
                            psi_param=param, psi_file=psi_file, seed=seed, samples=samples,
                            out=out, threads=str(threads), **extra)


@click.group()
def main():
    """Exact and sampled experiments on coprime approximation set systems."""


def _dispatch(command, **kw):
    try:
        cfg = _config(command, **kw)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    sys.exit(execute(cfg))


@main.command("measure")
@common_options
def measure_cmd(**kw):
    """Interval measure of every A_q against 2 psi(q) phi(q) / q."""
    _dispatch("measure", **kw)


@main.command("variance")
@common_options
def variance_cmd(**kw):
    """Exact variance, pair partition and audit, plus the dyadic Q ladder."""
    _dispatch("variance", **kw)


@main.command("montecarlo")
@common_options
def montecarlo_cmd(**kw):
    """Seeded Monte Carlo mean and variance of the solution count."""
    _dispatch("montecarlo", **kw)


@main.command("bounds")
@click.argument("subcommand", type=click.Choice(BOUND_SUBCOMMANDS))
@common_options
@click.option("--y", type=RATIONAL, default="1", show_default=True)
@click.option("--t", type=RATIONAL, default="1", show_default=True)
@click.option("--s", type=RATIONAL, default="1", show_default=True)
@click.option("--C", "C", type=RATIONAL, default="1", show_default=True)
@click.option("--kappa", type=RATIONAL, default="1/20", show_default=True)
@click.option("--K", "K", type=RATIONAL, default="0", show_default=True)
@click.option("--variant", type=click.Choice([bounds.PV, bounds.KMY]), default=bounds.PV, show_default=True)
def bounds_cmd(subcommand, **kw):
    """Ratio reports for the overlap lemmas and pair-sum bounds."""
    _dispatch("bounds", subcommand=subcommand, **kw)


@main.command("replay")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def replay_cmd(path, out):
    """Re-run the config echoed in a previous report."""
    try:
        env = ReportEnvelope.loads(Path(path).read_text())
        cfg = replace(ExperimentConfig.from_echo(env.config), out=out)
    except (OSError, ValueError, TypeError) as exc:
        click.echo(f"error: cannot replay {path}: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    sys.exit(execute(cfg))


def entry():
    try:
        rv = main(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(EXIT_VALIDATION)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_VALIDATION)
    sys.exit(rv or 0)


if __name__ == "__main__":
    entry()
