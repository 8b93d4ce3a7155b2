"""Verification report containers shared by every suite.

The structured payload (to_payload / to_json) is deterministic: identical
inputs, seed and tolerance produce byte-identical documents. Wall time is
kept on the in-memory object only and never serialized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

__version__ = "0.1.0"

PASS, FAIL, ERROR = "PASS", "FAIL", "ERRORED"


@dataclass(frozen=True)
class CheckRecord:
    """One pointwise check: a labelled residual against the tolerance."""

    label: str
    point: tuple
    residual: float
    passed: bool
    extras: dict = field(default_factory=dict)

    def to_payload(self):
        return {
            "label": self.label,
            "point": [float(c) for c in self.point],
            "residual": float(self.residual),
            "passed": bool(self.passed),
            "extras": {k: float(v) for k, v in sorted(self.extras.items())},
        }


@dataclass
class VerificationReport:
    suite: str
    verdict: str
    tolerance: float
    seed: int
    samples: int
    worst_residual: float
    checks: list
    details: dict = field(default_factory=dict)
    error: str = None
    wall_time: float = 0.0  # informational only; excluded from payloads
    version: str = __version__

    @property
    def passed(self):
        return self.verdict == PASS

    def to_payload(self):
        payload = {
            "suite": self.suite,
            "verdict": self.verdict,
            "tolerance": float(self.tolerance),
            "seed": int(self.seed),
            "samples": int(self.samples),
            "worst_residual": float(self.worst_residual),
            "version": self.version,
            "details": _plain(self.details),
            "checks": [c.to_payload() for c in self.checks],
        }
        if self.error is not None:
            payload["error"] = str(self.error)
        return payload

    def to_json(self):
        return json.dumps(self.to_payload(), indent=2, sort_keys=True) + "\n"

    def summary_line(self):
        if self.verdict == ERROR:
            return f"{self.suite:<12} {self.verdict:<7} {self.error}"
        return (
            f"{self.suite:<12} {self.verdict:<7} "
            f"worst residual {self.worst_residual:.3e} "
            f"(tol {self.tolerance:.1e}, {self.samples} samples, seed {self.seed})"
        )

    def render_text(self):
        lines = [self.summary_line()]
        for key, value in sorted(self.details.items()):
            lines.append(f"  {key}: {value}")
        failing = [c for c in self.checks if not c.passed]
        for c in failing[:8]:
            lines.append(f"  FAIL {c.label} at {c.point}: residual {c.residual:.3e}")
        if len(failing) > 8:
            lines.append(f"  ... {len(failing) - 8} more failing checks")
        return "\n".join(lines)


def _plain(value):
    """Recursively coerce to JSON-stable python primitives."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    return float(value)


def finish_report(suite, tolerance, seed, samples, checks, details=None,
                  error=None, wall_time=0.0):
    """Assemble a report; verdict is PASS iff every check passed."""
    if error is not None:
        verdict = ERROR
    elif all(c.passed for c in checks):
        verdict = PASS
    else:
        verdict = FAIL
    worst = max((c.residual for c in checks), default=0.0)
    return VerificationReport(
        suite=suite, verdict=verdict, tolerance=tolerance, seed=seed,
        samples=samples, worst_residual=worst, checks=list(checks),
        details=dict(details or {}), error=error, wall_time=wall_time)
