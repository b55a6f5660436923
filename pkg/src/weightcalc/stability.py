"""Stability decisions for ultraholomorphic classes on sectors S_alpha.

The pipeline is: triviality screen on the growth of j^{(1-alpha)} m_j, then
the narrow-sector route (alpha <= 1, via M^alpha) or the wide-sector route
(alpha > 1, gated by the gamma index).  Weight functions go through the
(alpha0) condition directly, cross-checked against their associated matrix.
"""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import (Jet, gorny_cartan_constants, membership_certificate)
from .errors import GrowthGateFailed, InvalidSpec, NoFiniteH
from .indices import gamma_omega, gamma_sequence
from .matrices import (WeightMatrix, build_m_alpha, check_matrix_condition,
                       constant_matrix, growth_class)
from .reports import ConditionReport, Thresholds, Verdict, _jsonable
from .sequences import WeightSequence, gevrey_bar, is_log_convex, rai_report
from .weights import (WeightFunction, check_omega_conditions, matrix_from_omega,
                      power_of)

FDB_GATE_N = 128
MAP_N = 512
SNAP = 1e-9


class Outcome(str, enum.Enum):
    TRIVIAL = "TrivialClass"
    HOLO_INVERSE = "StableHoloInverse"
    COMPOSITION = "StableComposition"
    NOT_STABLE = "NotStable"
    INCONCLUSIVE = "Inconclusive"


class Justification(str, enum.Enum):
    NARROW = "NarrowThm"
    WIDE = "WideThm"
    TRIVIAL_I = "TrivialRemark-i"
    TRIVIAL_II = "TrivialRemark-ii"
    REDUCTION = "ReductionRemark-iii"
    OMEGA_NARROW = "OmegaThmNarrow"
    OMEGA_WIDE = "OmegaThmWide"


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Outcome
    justification: Justification
    alpha: float
    reports: dict = field(default_factory=dict)
    notes: tuple = ()
    directive: str | None = None

    def to_dict(self) -> dict:
        reps = {k: (v.to_dict() if hasattr(v, "to_dict") else v)
                for k, v in self.reports.items()}
        return _jsonable({"verdict": self.verdict.value,
                          "justification": self.justification.value,
                          "alpha": self.alpha, "reports": reps, "notes": self.notes,
                          "directive": self.directive})


# ------------------------------------------------------------------ caching

def _row_key(row: WeightSequence) -> str:
    return hashlib.blake2b(np.ascontiguousarray(row.logM).tobytes(), digest_size=16).hexdigest()


def _matrix_check(m: WeightMatrix, which: str, th, cache):
    if which == "fdb" and m.N > FDB_GATE_N:
        m = _truncate(m, FDB_GATE_N)
    if cache is None:
        return check_matrix_condition(m, which, th)
    key = (which, m.params, tuple(_row_key(r) for r in m.rows), th)
    if key not in cache:
        cache[key] = check_matrix_condition(m, which, th)
    return cache[key]


def _truncate(m: WeightMatrix, n: int) -> WeightMatrix:
    rows = tuple(WeightSequence(r.logM[: n + 1], r.label, r.generator) for r in m.rows)
    return WeightMatrix(rows, m.params, m.origin, m.checks)


def _gamma_lower(row: WeightSequence, th, cache):
    key = ("gamma", _row_key(row), th)
    if cache is not None and key in cache:
        return cache[key]
    est = gamma_sequence(row, th=th)
    if cache is not None:
        cache[key] = est
    return est


# ---------------------------------------------------------------- screening

def triviality_screen(m: WeightMatrix, alpha: float, th: Thresholds | None = None
                      ) -> StabilityVerdict | None:
    """Decide the degenerate cases from the growth of ((1-alpha) j ln j + ln M_j)/j.

    Returns None when every row grows to +inf (the main theorems apply)."""
    classes = {p: growth_class(row, alpha, th) for p, row in zip(m.params, m.rows)}
    vals = set(classes.values())
    reports = {"growth": classes}
    if vals == {"+inf"}:
        return None
    if alpha > 1 and vals <= {"-inf", "bounded"}:
        return StabilityVerdict(Outcome.TRIVIAL, Justification.TRIVIAL_I, alpha, reports,
                                ("only constant functions",))
    if alpha <= 1 and vals == {"-inf"}:
        return StabilityVerdict(Outcome.TRIVIAL, Justification.TRIVIAL_II, alpha, reports,
                                ("class is trivial",))
    if alpha <= 1 and vals == {"bounded"}:
        return StabilityVerdict(Outcome.INCONCLUSIVE, Justification.REDUCTION, alpha, reports,
                                (f"class coincides with the one of Gbar^{alpha - 1:g}",),
                                directive="reduce")
    return StabilityVerdict(Outcome.INCONCLUSIVE, Justification.NARROW if alpha <= 1
                            else Justification.WIDE, alpha, reports,
                            ("MixedRows: rows disagree on growth class",))


def _reduction(alpha: float, n: int, th, cache) -> StabilityVerdict:
    row = gevrey_bar(alpha - 1.0, n)
    rep = _matrix_check(constant_matrix(row, (1.0,)), "rai", th, cache)
    if rep.witnessed:
        outcome = Outcome.HOLO_INVERSE
    elif rep.fails:
        outcome = Outcome.NOT_STABLE
    else:
        outcome = Outcome.INCONCLUSIVE
    return StabilityVerdict(outcome, Justification.REDUCTION, alpha, {"M_rai": rep},
                            (f"reduced to constant Gbar^{alpha - 1:g}",))


# ------------------------------------------------------------- main routes

def _decide(rai, extra: dict, just, alpha, reports, notes=()) -> StabilityVerdict:
    reports = {"M_rai": rai, **reports}
    if rai.fails:
        return StabilityVerdict(Outcome.NOT_STABLE, just, alpha, reports, tuple(notes))
    if not rai.witnessed:
        return StabilityVerdict(Outcome.INCONCLUSIVE, just, alpha, reports, tuple(notes))
    reports.update(extra)
    if all(r.witnessed for r in extra.values()):
        return StabilityVerdict(Outcome.COMPOSITION, just, alpha, reports, tuple(notes))
    return StabilityVerdict(Outcome.HOLO_INVERSE, just, alpha, reports, tuple(notes))


def classify_narrow(m: WeightMatrix, alpha: float, th: Thresholds | None = None,
                    cache: dict | None = None) -> StabilityVerdict:
    """0 < alpha <= 1: holomorphic/inverse closedness iff M^alpha has (M_rai)."""
    if not 0 < alpha <= 1:
        raise InvalidSpec("classify_narrow needs 0 < alpha <= 1")
    m_alpha = build_m_alpha(m, alpha, th)
    rai = _matrix_check(m_alpha, "rai", th, cache)
    extra = {}
    if rai.witnessed:
        extra = {"M_c_omega": _matrix_check(m, "c_omega", th, cache),
                 "M_dc(M^alpha)": _matrix_check(m_alpha, "dc", th, cache)}
        if all(r.witnessed for r in extra.values()):
            extra["M_fdb(M^alpha)"] = _matrix_check(m_alpha, "fdb", th, cache)
    return _decide(rai, extra, Justification.NARROW, alpha, {})


def classify_wide(m: WeightMatrix, alpha: float, th: Thresholds | None = None,
                  cache: dict | None = None) -> StabilityVerdict:
    """alpha > 1: needs gamma(M^(p)) > alpha - 1 for every row, then (M_rai) on m."""
    if not alpha > 1:
        raise InvalidSpec("classify_wide needs alpha > 1")
    gate = {}
    for p, row in zip(m.params, m.rows):
        if not is_log_convex(row.logM):
            gate[p] = None
            continue
        gate[p] = _gamma_lower(row, th, cache)
    gate_summary = {p: (None if g is None else g.lower_witnessed) for p, g in gate.items()}
    if any(g is None or not g.lower_witnessed > alpha - 1 for g in gate.values()):
        return StabilityVerdict(Outcome.INCONCLUSIVE, Justification.WIDE, alpha,
                                {"gamma_gate": gate_summary},
                                ("gamma gate not witnessed; hypotheses unverified",))
    rai = _matrix_check(m, "rai", th, cache)
    extra = {}
    if rai.witnessed:
        extra = {"M_c_omega": _matrix_check(m, "c_omega", th, cache),
                 "M_dc": _matrix_check(m, "dc", th, cache)}
        if all(r.witnessed for r in extra.values()):
            extra["M_fdb"] = _matrix_check(m, "fdb", th, cache)
    return _decide(rai, extra, Justification.WIDE, alpha, {"gamma_gate": gate_summary})


def classify(m: WeightMatrix, alpha: float, th: Thresholds | None = None,
             cache: dict | None = None) -> StabilityVerdict:
    """Screen, then dispatch to the narrow or wide route."""
    if not alpha > 0:
        raise InvalidSpec("alpha must be positive")
    screen = triviality_screen(m, alpha, th)
    if screen is not None:
        if screen.directive == "reduce":
            return _reduction(alpha, m.N, th, cache)
        return screen
    try:
        if alpha <= 1:
            return classify_narrow(m, alpha, th, cache)
        return classify_wide(m, alpha, th, cache)
    except GrowthGateFailed as exc:
        return StabilityVerdict(Outcome.INCONCLUSIVE, Justification.NARROW, alpha, {},
                                (str(exc),))


# ----------------------------------------------------------- weight functions

def _omega_branch(conds: dict, just, alpha, reports, notes) -> StabilityVerdict:
    a0 = conds["alpha0"]
    reports = {**reports, "alpha0": a0}
    if a0.fails:
        return StabilityVerdict(Outcome.NOT_STABLE, just, alpha, reports, tuple(notes))
    if not a0.witnessed:
        return StabilityVerdict(Outcome.INCONCLUSIVE, just, alpha, reports, tuple(notes))
    reports["omega2"] = conds["omega2"]
    outcome = Outcome.COMPOSITION if conds["omega2"].witnessed else Outcome.HOLO_INVERSE
    return StabilityVerdict(outcome, just, alpha, reports, tuple(notes))


def classify_omega(w: WeightFunction, alpha: float, th: Thresholds | None = None,
                   cross_check: bool = True) -> StabilityVerdict:
    """Stability of the class defined by a weight function."""
    if not alpha > 0:
        raise InvalidSpec("alpha must be positive")
    conds = check_omega_conditions(w, th)
    notes = []
    if alpha <= 1:
        out = _omega_branch(conds, Justification.OMEGA_NARROW, alpha, {}, notes)
    else:
        est = gamma_omega(w)
        gate = {"gamma_lower": est.lower_witnessed, "sentinel": est.sentinel}
        if not est.lower_witnessed > alpha - 1:
            return StabilityVerdict(Outcome.INCONCLUSIVE, Justification.OMEGA_WIDE, alpha,
                                    {"gamma_gate": gate},
                                    ("gamma gate not witnessed; hypotheses unverified",))
        # any s in (alpha - 1, gamma) works; an infinite index is capped at alpha + 1
        s = 0.5 * ((alpha - 1) + min(est.lower_witnessed, alpha + 1.0))
        ws = check_omega_conditions(power_of(w, s), th)
        gate.update({"s": s, "omega5(omega^s)": ws["omega5"], "alpha0(omega^s)": ws["alpha0"]})
        if not (ws["omega5"].witnessed and ws["alpha0"].witnessed):
            return StabilityVerdict(Outcome.INCONCLUSIVE, Justification.OMEGA_WIDE, alpha,
                                    {"gamma_gate": gate},
                                    (f"omega^s hypotheses not witnessed at s={s:g}",))
        out = _omega_branch(conds, Justification.OMEGA_WIDE, alpha, {"gamma_gate": gate}, notes)
    if cross_check:
        out = _cross_check(w, alpha, th, out)
    return out


def _cross_check(w, alpha, th, out: StabilityVerdict) -> StabilityVerdict:
    try:
        m = matrix_from_omega(w, th=th)
    except Exception as exc:  # the matrix needs a normalized weight; skip otherwise
        note = f"matrix cross-check skipped: {exc}"
        return StabilityVerdict(out.verdict, out.justification, alpha, out.reports,
                                out.notes + (note,))
    via = classify(m, alpha, th)
    stable = {Outcome.HOLO_INVERSE, Outcome.COMPOSITION}
    agree = (via.verdict is Outcome.INCONCLUSIVE or out.verdict is Outcome.INCONCLUSIVE
             or (via.verdict in stable) == (out.verdict in stable))
    note = (f"matrix route: {via.verdict.value}" if agree
            else f"InternalInconsistency: matrix route gives {via.verdict.value}")
    reports = {**out.reports, "matrix_route": via.verdict.value}
    return StabilityVerdict(out.verdict, out.justification, alpha, reports, out.notes + (note,))


# --------------------------------------------------------------- Gevrey map

def gevrey_closed_form(alpha: float, beta: float, snap: float = SNAP
                       ) -> tuple[Outcome, Justification]:
    """Known answer for the constant matrix Gbar^beta on S_alpha."""
    edge = alpha - 1.0
    if alpha <= 1:
        if beta < edge - snap:
            return Outcome.TRIVIAL, Justification.TRIVIAL_II
        if abs(beta - edge) <= snap:
            return Outcome.NOT_STABLE, Justification.REDUCTION
        if beta < 1 - snap:
            return Outcome.NOT_STABLE, Justification.NARROW
        return Outcome.COMPOSITION, Justification.NARROW
    if beta <= edge + snap:
        return Outcome.TRIVIAL, Justification.TRIVIAL_I
    if beta >= 1 - snap:
        return Outcome.COMPOSITION, Justification.WIDE
    # 1 < alpha < 2 and alpha - 1 < beta < 1: gamma gate passes, (rai) fails
    return Outcome.NOT_STABLE, Justification.WIDE


def gevrey_map(alpha_grid, beta_grid, n: int = MAP_N, th: Thresholds | None = None,
               pipeline: bool = True) -> list[dict]:
    """Closed-form verdict per (alpha, beta) cell, plus the general pipeline verdict."""
    for a in alpha_grid:
        if not 0.05 - SNAP <= a <= 3.5 + SNAP:
            raise InvalidSpec("alpha grid must lie in [0.05, 3.5]")
    for b in beta_grid:
        if not -2 - SNAP <= b <= 3 + SNAP:
            raise InvalidSpec("beta grid must lie in [-2, 3]")
    cache: dict = {}
    rows_by_beta = {}
    out = []
    for a in alpha_grid:
        for b in beta_grid:
            verdict, just = gevrey_closed_form(a, b)
            cell = {"alpha": float(a), "beta": float(b), "verdict": verdict.value,
                    "justification": just.value}
            if pipeline:
                if b not in rows_by_beta:
                    rows_by_beta[b] = constant_matrix(gevrey_bar(b, n), (1.0,))
                got = classify(rows_by_beta[b], a, th, cache)
                cell["pipeline"] = got.verdict.value
                cell["agree"] = (got.verdict is Outcome.INCONCLUSIVE
                                 or got.verdict is verdict)
            out.append(cell)
    return out


# ------------------------------------------------------------ class equality

def class_equality_demo(m: WeightMatrix, alpha: float, probes, th=None) -> dict:
    """Certificates of probe jets against rows of m and of M^alpha.

    The M^alpha -> M direction is exact (M^alpha <= M pointwise); the other
    direction is accepted when some M^alpha row certifies the probe with h
    inflated by at most q^{1-alpha} and norm by at most A."""
    m_alpha = build_m_alpha(m, alpha, th)
    A, q = gorny_cartan_constants(alpha)
    dominated = all(bool(np.all(ra.logM <= r.logM + 1e-12))
                    for ra, r in zip(m_alpha.rows, m.rows))
    results = []
    for k, probe in enumerate(probes):
        cert_m = _best_certificate(probe, m)
        cert_a = _best_certificate(probe, m_alpha)
        within = None
        if cert_m is not None and cert_a is not None:
            within = bool(cert_a.h <= cert_m.h * q ** (1 - alpha) * (1 + 1e-12)
                          and cert_a.norm <= A * max(cert_m.norm, 1.0))
        results.append({"probe": k,
                        "M": None if cert_m is None else cert_m.to_dict(),
                        "M_alpha": None if cert_a is None else cert_a.to_dict(),
                        "within_factor": within,
                        "minorant_direction": cert_a is None or cert_m is not None})
    return _jsonable({"alpha": alpha, "A": A, "q": q, "pointwise_domination": dominated,
                      "probes": results, "kind": "evidence"})


def _best_certificate(probe, m: WeightMatrix):
    best = None
    for row in m.rows:
        try:
            c = membership_certificate(probe, row)
        except NoFiniteH:
            continue
        if best is None or (c.h, c.norm) < (best.h, best.norm):
            best = c
    return best
