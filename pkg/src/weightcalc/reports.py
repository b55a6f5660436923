"""Verdicts, finite-truncation reports and the trace stabilization heuristic.

Every asymptotic condition ("there is a constant C such that ... for all j")
is replaced by the minimal constant observed at a handful of truncations
J = N/4, N/2, 3N/4, N.  The resulting trace is judged by `judge_trace`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, asdict
from typing import Any, Sequence

import numpy as np


class Verdict(str, enum.Enum):
    WITNESSED = "WitnessedUpToN"
    FAILS = "FailsAtTruncation"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class Thresholds:
    """Knobs of the stabilization heuristic.

    tau_stab: allowed last-doubling increase, relative to max(1, |c|), for
        a trace to count as flat.
    tau_grow: a nondecreasing trace whose last per-doubling increment has
        shrunk by less than this fraction of the previous one keeps growing
        at least like ln J and is declared failing.
    noise: increments below this absolute size are treated as zero.
    """

    tau_stab: float = 0.05
    tau_grow: float = 0.25
    noise: float = 1e-9

    def __post_init__(self):
        if not (self.tau_stab > 0 and 0 < self.tau_grow < 1 and self.noise > 0):
            raise ValueError("thresholds must be positive (tau_grow < 1)")


DEFAULT_THRESHOLDS = Thresholds()


def truncations(n: int) -> tuple[int, int, int, int]:
    """The four truncation points used by every trace."""
    return (max(1, n // 4), max(1, n // 2), max(1, (3 * n) // 4), n)


def _slack(value: float, noise: float) -> float:
    return noise * max(1.0, abs(value))


def judge_trace(values: Sequence[float], th: Thresholds | None = None) -> Verdict:
    """Classify a trace of minimal constants (log domain) at increasing J.

    Checked in this order:
    * fails if the trace is nondecreasing and the last per-doubling
      increment is at least (1 - tau_grow) times the previous one,
    * witnessed if the last increment is at most tau_stab * max(1, |c(N/2)|),
    * undetermined otherwise.
    """
    th = th or DEFAULT_THRESHOLDS
    c = [float(v) for v in values]
    if len(c) != 4:
        raise ValueError("trace must have four entries")
    if any(math.isinf(v) and v > 0 for v in c):
        return Verdict.FAILS
    quarter, half, _, full = c
    d1 = half - quarter
    d2 = full - half
    monotone = all(b >= a - _slack(a, th.noise) for a, b in zip(c, c[1:]))
    if monotone and d2 > _slack(half, th.noise) and d2 >= (1.0 - th.tau_grow) * d1:
        return Verdict.FAILS
    if d2 <= th.tau_stab * max(1.0, abs(half)) + _slack(half, th.noise):
        return Verdict.WITNESSED
    return Verdict.UNDETERMINED


def judge_divergence(values: Sequence[float], th: Thresholds | None = None) -> Verdict:
    """Witnessed when the trace keeps increasing at a non-decaying rate.

    Used for "tends to +infinity" statements such as m_j -> infinity.
    """
    th = th or DEFAULT_THRESHOLDS
    quarter, half, _, full = (float(v) for v in values)
    d1 = half - quarter
    d2 = full - half
    if d2 <= _slack(half, th.noise):
        return Verdict.FAILS
    if d2 >= (1.0 - th.tau_grow) * d1:
        return Verdict.WITNESSED
    return Verdict.UNDETERMINED


def judge_vanishing(values: Sequence[float], th: Thresholds | None = None) -> Verdict:
    """Judge a nonnegative ratio trace that should tend to zero."""
    th = th or DEFAULT_THRESHOLDS
    half, full = float(values[1]), float(values[3])
    if full <= th.noise:
        return Verdict.WITNESSED
    if full <= (1.0 - th.tau_grow) * half:
        return Verdict.WITNESSED
    if full >= (1.0 - th.tau_stab) * half:
        return Verdict.FAILS
    return Verdict.UNDETERMINED


def combine(verdicts: Sequence[Verdict]) -> Verdict:
    """All witnessed -> witnessed; any failure -> fails; else undetermined."""
    vs = list(verdicts)
    if vs and all(v is Verdict.WITNESSED for v in vs):
        return Verdict.WITNESSED
    if any(v is Verdict.FAILS for v in vs):
        return Verdict.FAILS
    return Verdict.UNDETERMINED


def _jsonable(value: Any) -> Any:
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return value


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a finite-truncation check of one condition."""

    condition: str
    verdict: Verdict
    witness: dict = field(default_factory=dict)
    trace: tuple = ()
    failure_site: tuple | None = None
    notes: tuple = ()

    def __post_init__(self):
        js = [j for j, _ in self.trace]
        if js != sorted(js):
            raise ValueError("trace must be indexed by increasing J")

    @property
    def witnessed(self) -> bool:
        return self.verdict is Verdict.WITNESSED

    @property
    def fails(self) -> bool:
        return self.verdict is Verdict.FAILS

    def trace_values(self) -> list[float]:
        return [v for _, v in self.trace]

    def to_dict(self) -> dict:
        return _jsonable(asdict(self) | {"verdict": self.verdict})


def traced_report(condition: str, n: int, curve, th: Thresholds | None = None,
                  witness_name: str | None = None, failure_site=None,
                  notes=(), judge=judge_trace) -> ConditionReport:
    """Build a report from `curve(J)`, the minimal log-constant at truncation J."""
    js = truncations(n)
    vals = [float(curve(J)) for J in js]
    verdict = judge(vals, th)
    witness = {}
    if witness_name:
        witness["ln_" + witness_name] = vals[-1]
        witness[witness_name] = math.exp(min(max(vals[-1], 0.0), 700.0))
    return ConditionReport(condition, verdict, witness, tuple(zip(js, vals)),
                           failure_site, tuple(notes))
