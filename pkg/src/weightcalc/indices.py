"""Growth indices gamma(M) and gamma(omega) by bisection.

P_gamma for a sequence is tested as "m_j / (j+1)^gamma is almost
increasing", i.e. the log-defect A(gamma) = max_{j<=k} (u_j - u_k) with
u_j = log m_j - gamma ln(j+1) must have a flat trace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .reports import Thresholds, Verdict, _jsonable, judge_trace, traced_report
from .sequences import WeightSequence, is_log_convex, quotients
from .weights import WeightFunction, condition_grid

GAMMA_MAX = 16.0
BRACKET_WIDTH = 1.0 / 64.0
K_GRID = (2.0, 4.0, 8.0, 16.0)
TAU_MARGIN = 0.02
PGAMMA_NOTE = ("P_gamma tested as almost-increase of m_j/(j+1)^gamma; equivalent "
               "to the witness-sequence form up to the comparison constant")


@dataclass(frozen=True)
class IndexEstimate:
    """Bisection outcome. `sentinel` is '+inf' or '-inf' when a cap was hit."""

    value: float
    lower_witnessed: float
    upper_refuted: float
    trace: tuple
    sentinel: str | None = None
    notes: tuple = ()

    @property
    def is_infinite(self) -> bool:
        return self.sentinel == "+inf"

    def to_dict(self) -> dict:
        return _jsonable({"value": self.value, "lower_witnessed": self.lower_witnessed,
                          "upper_refuted": self.upper_refuted, "sentinel": self.sentinel,
                          "trace": [list(t) for t in self.trace], "notes": self.notes})


def _bisect(test, lo: float, hi: float, width: float, notes=()) -> IndexEstimate:
    """sup{gamma: test(gamma)} on [lo, hi]; test returns (ok, summary)."""
    trace = []

    def run(g):
        ok, summary = test(g)
        trace.append((g, ok, summary))
        return ok

    if run(hi):
        return IndexEstimate(hi, hi, math.inf, tuple(trace), "+inf", tuple(notes))
    if not run(lo):
        return IndexEstimate(lo, -math.inf, lo, tuple(trace), "-inf", tuple(notes))
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if run(mid):
            lo = mid
        else:
            hi = mid
    return IndexEstimate(0.5 * (lo + hi), lo, hi, tuple(trace), None, tuple(notes))


def defect_report(s: WeightSequence, gamma: float, th=None):
    """Trace of A(gamma) over truncations of the quotient sequence."""
    q = quotients(s)
    u = q - gamma * np.log(np.arange(1, q.size + 1))
    pm = np.maximum.accumulate(np.maximum.accumulate(u) - u)
    return traced_report("P_gamma", q.size, lambda J: pm[J - 1], th)


def gamma_sequence(s: WeightSequence, gamma_max: float = GAMMA_MAX,
                   width: float = BRACKET_WIDTH,
                   th: Thresholds | None = None) -> IndexEstimate:
    """Estimate gamma(M) for a log-convex sequence."""
    if not is_log_convex(s.logM):
        raise InvalidSpec(f"{s!r} is not log-convex; regularize it first")
    if s.N < 32:
        raise InvalidSpec("gamma_sequence needs N >= 32")

    def test(g):
        rep = defect_report(s, g, th)
        return rep.witnessed, rep.verdict.value

    return _bisect(test, -gamma_max, gamma_max, width, (PGAMMA_NOTE,))


def omega_ratio_test(w: WeightFunction, gamma: float, k_grid=K_GRID,
                     tau_margin: float = TAU_MARGIN, y_top: float | None = None):
    """P_{omega,gamma}: some K has max omega(K^gamma t)/omega(t) <= K(1 - margin)
    over the upper half of the t grid (shrunk so that K^gamma t stays in range)."""
    ys = condition_grid(w, y_top)
    top = float(ys[-1])
    best = None
    reduced = False
    for k in k_grid:
        shift = gamma * math.log(k)
        hi = top - shift
        lo = top / 2.0
        if hi < lo:
            reduced = True
            lo = hi / 2.0
        if hi <= 1.0:
            continue
        sub = ys[(ys >= lo) & (ys <= hi)]
        if sub.size < 2:
            continue
        lr = float(np.max(w.log_phi(sub + shift) - w.log_phi(sub)))
        margin = lr - math.log(k * (1.0 - tau_margin))
        if best is None or margin < best[1]:
            best = (k, margin)
        if margin <= 0:
            return True, {"K": k, "log_margin": margin, "reduced": reduced}
    summary = {"K": None if best is None else best[0],
               "log_margin": None if best is None else best[1], "reduced": reduced}
    return False, summary


def gamma_omega(w: WeightFunction, k_grid=K_GRID, tau_margin: float = TAU_MARGIN,
                gamma_max: float = GAMMA_MAX, width: float = BRACKET_WIDTH,
                y_top: float | None = None) -> IndexEstimate:
    """Estimate gamma(omega) = sup{gamma > 0 : P_{omega,gamma}}."""
    reduced = []

    def test(g):
        ok, summary = omega_ratio_test(w, g, k_grid, tau_margin, y_top)
        if summary.get("reduced"):
            reduced.append(g)
        return ok, summary

    est = _bisect(test, 0.0, gamma_max, width)
    if est.sentinel == "-inf":
        est = IndexEstimate(0.0, 0.0, 0.0, est.trace, None, est.notes)
    if reduced:
        note = "t grid shrunk for large K^gamma; reduced evidence"
        est = IndexEstimate(est.value, est.lower_witnessed, est.upper_refuted,
                            est.trace, est.sentinel, est.notes + (note,))
    return est
