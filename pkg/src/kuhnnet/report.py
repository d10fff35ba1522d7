"""Pass/fail records shared by the builders and the verifier."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ParseError
from .net import loads_json

REPORT_FORMAT = "kuhnnet-report/1"


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    bound: float
    tolerance: float = 0.0
    samples: int = 0
    seed: int | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.bound + self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": _num(self.measured),
            "bound": _num(self.bound),
            "tolerance": self.tolerance,
            "pass": self.passed,
            "samples": self.samples,
            "seed": self.seed,
            "detail": self.detail,
        }


def _num(v):
    v = float(v)
    if math.isfinite(v):
        return v
    return "inf" if v > 0 else ("-inf" if v < 0 else "nan")


def flag(name: str, ok: bool, detail: str = "") -> Check:
    """A boolean check: measured 0 against bound 0 when it holds, 1 otherwise."""
    return Check(name, 0.0 if ok else 1.0, 0.0, detail=detail)


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport") -> None:
        self.checks.extend(other.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"format": REPORT_FORMAT, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def table(self) -> str:
        rows = [("check", "measured", "bound", "tol", "result")]
        for c in self.checks:
            rows.append((c.name, f"{c.measured:.6g}", f"{c.bound:.6g}", f"{c.tolerance:.0e}" if c.tolerance else "0",
                         "pass" if c.passed else "FAIL"))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def report_from_dict(doc) -> VerificationReport:
    if not isinstance(doc, dict) or doc.get("format") != REPORT_FORMAT:
        raise ParseError(f"format: expected {REPORT_FORMAT!r}")
    out = VerificationReport()
    try:
        for c in doc["checks"]:
            out.add(Check(c["name"], float(c["measured"]), float(c["bound"]), float(c["tolerance"]),
                          int(c["samples"]), c["seed"], c.get("detail", "")))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"invalid report: {e}") from None
    return out


def loads_report(data) -> VerificationReport:
    return report_from_dict(loads_json(data))
