"""Line-delimited JSON records and CSV series.

Exact rationals are written as ``"p/q"`` strings (denominator always
present), high-precision values as ``{"hp": "<decimal>", "bits": 192}``.
Both decode back to the same Python values.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field, fields
from fractions import Fraction

import mpmath

from dslab import hp

SCHEMA_VERSION = 1
HP_DIGITS = 60  # enough for an exact round trip of a 192-bit mantissa

_RATIONAL = re.compile(r"^-?\d+/\d+$")


def encode(v):
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, mpmath.mpf) or type(v).__name__ == "mpf":
        return {"hp": hp.mp.nstr(v, HP_DIGITS), "bits": hp.PREC_BITS}
    if isinstance(v, float):
        return v
    if isinstance(v, dict):
        return {str(k): encode(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [encode(x) for x in v]
    raise TypeError(f"cannot encode {type(v).__name__}")


def decode(v):
    if isinstance(v, str) and _RATIONAL.match(v):
        n, d = v.split("/")
        return Fraction(int(n), int(d))
    if isinstance(v, dict):
        if set(v) == {"hp", "bits"}:
            return hp.mp.mpf(v["hp"])
        return {k: decode(x) for k, x in v.items()}
    if isinstance(v, list):
        return [decode(x) for x in v]
    return v


@dataclass
class ReportEnvelope:
    command: str
    config: dict
    payload: list = field(default_factory=list)
    timing: float | None = None
    schema_version: int = SCHEMA_VERSION

    def payload_lines(self) -> list[str]:
        return [_line(rec) for rec in self.payload]

    def dumps(self) -> str:
        head = {"record": "envelope", "schema_version": self.schema_version,
                "command": self.command, "config": self.config}
        lines = [_line(head)] + self.payload_lines()
        if self.timing is not None:
            lines.append(_line({"record": "timing", "wall_seconds": self.timing}))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ReportEnvelope":
        recs = [decode(json.loads(x)) for x in text.splitlines() if x.strip()]
        if not recs or recs[0].get("record") != "envelope":
            raise ValueError("first record must be the envelope header")
        head = recs[0]
        env = cls(head["command"], head["config"], schema_version=head["schema_version"])
        for rec in recs[1:]:
            if rec.get("record") == "timing":
                env.timing = rec["wall_seconds"]
            else:
                env.payload.append(rec)
        return env


def _line(rec: dict) -> str:
    return json.dumps(encode(rec), sort_keys=True, separators=(",", ":"))


def record(kind: str, obj=None, **extra) -> dict:
    """Flatten a dataclass report into a payload record."""
    out = {"record": kind}
    if obj is not None:
        for f in fields(obj):
            if f.name == "class_of":
                continue
            out[f.name] = getattr(obj, f.name)
    out.update(extra)
    return out


def partition_record(rep) -> dict:
    out = record("partition", rep)
    out["e2_buckets"] = [{"i": i, "j": j, "mass": m} for (i, j), m in rep.e2_buckets.items()]
    out["e3_buckets"] = [{"i": i, "mass": m} for i, m in rep.e3_buckets.items()]
    out["borderline"] = [list(p) for p in rep.borderline]
    return out


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(row[c]) for c in columns])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if type(v).__name__ == "mpf":
        return hp.mp.nstr(v, 20)
    return v
