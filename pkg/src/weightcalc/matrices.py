"""Weight matrices: finite families of weight sequences indexed by a grid.

Every "there exists a partner parameter" quantifier is searched over the
finite grid only; reports carry a note saying so.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .errors import GrowthGateFailed, InvalidSpec
from .reports import (ConditionReport, Thresholds, Verdict, _jsonable, combine,
                      judge_divergence, judge_trace, traced_report, truncations)
from .sequences import (WeightSequence, check_condition, compare, dc_report,
                        fdb_report, gevrey_bar, make_sequence, mg_report,
                        rai_report, xlogx)
from .weights import log_convex_minorant

GRID_NOTE = "partner search limited to the finite parameter grid"
ENUMERATION_LIMIT = 10**7
MATRIX_CONDITIONS = ("sc", "lc", "c_omega", "h", "rai", "fdb", "mg", "dc")


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Rows M^(p) for a strictly increasing grid of p, pointwise monotone in p."""

    rows: tuple
    params: tuple
    origin: tuple = ("explicit",)
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.rows) != len(self.params) or not self.rows:
            raise InvalidSpec("need one row per grid parameter")
        ps = [float(p) for p in self.params]
        if ps[0] <= 0 or any(b <= a for a, b in zip(ps, ps[1:])):
            raise InvalidSpec("matrix parameters must be positive and strictly increasing")
        n = self.rows[0].N
        if any(r.N != n for r in self.rows):
            raise InvalidSpec("all rows must share the truncation N")
        for a, b, pa, pb in zip(self.rows, self.rows[1:], ps, ps[1:]):
            gap = float(np.max(a.logM - b.logM))
            if gap > 1e-9 * max(1.0, float(np.max(np.abs(b.logM)))):
                raise InvalidSpec(f"rows not monotone in p between {pa:g} and {pb:g}")
        object.__setattr__(self, "params", tuple(ps))

    @property
    def N(self) -> int:
        return self.rows[0].N

    def row(self, p: float) -> WeightSequence:
        return self.rows[self.params.index(float(p))]

    def to_dict(self) -> dict:
        return {"origin": _jsonable(self.origin), "params": list(self.params),
                "N": self.N, "rows": [r.logM.tolist() for r in self.rows]}


def constant_matrix(s: WeightSequence, grid=(1.0, 2.0, 4.0)) -> WeightMatrix:
    """Replicate one sequence across the grid."""
    return WeightMatrix(tuple(s for _ in grid), tuple(grid), ("constant", s.label))


def power_family(beta: float, grid=(1.0, 2.0, 4.0), n: int = 64) -> WeightMatrix:
    """Rows Ḡ^{beta - 1/(p+1)}."""
    rows = tuple(gevrey_bar(beta - 1.0 / (p + 1.0), n) for p in grid)
    return WeightMatrix(rows, tuple(grid), ("power_family", float(beta)))


def make_matrix(spec: dict) -> WeightMatrix:
    """Kinds: constant, from_omega, power_family, explicit."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidSpec("matrix spec must be an object with a 'kind'")
    kind = spec["kind"]
    n = spec.get("N", 64)
    grid = tuple(spec.get("grid", (1.0, 2.0, 4.0)))
    if kind == "constant":
        return constant_matrix(make_sequence({"N": n, **spec["sequence"]}), grid)
    if kind == "power_family":
        return power_family(float(spec["beta"]), grid, n)
    if kind == "from_omega":
        from .weights import DEFAULT_ELL_GRID, make_weight_function, matrix_from_omega
        w = make_weight_function(spec["omega"])
        return matrix_from_omega(w, tuple(spec.get("grid", DEFAULT_ELL_GRID)), n)
    if kind == "explicit":
        rows = tuple(make_sequence({"N": n, **r}) for r in spec["rows"])
        return WeightMatrix(rows, grid, ("explicit",))
    raise InvalidSpec(f"unknown matrix kind {kind!r}")


@dataclass(frozen=True)
class MatrixConditionReport:
    condition: str
    verdict: Verdict
    pairing: dict
    witness: dict
    trace: dict
    notes: tuple = (GRID_NOTE,)

    @property
    def witnessed(self) -> bool:
        return self.verdict is Verdict.WITNESSED

    @property
    def fails(self) -> bool:
        return self.verdict is Verdict.FAILS

    def to_dict(self) -> dict:
        return _jsonable({"condition": self.condition, "verdict": self.verdict,
                          "pairing": self.pairing, "witness": self.witness,
                          "trace": self.trace, "notes": self.notes})


def _pair_fn(which: str, th):
    if which == "rai":
        return lambda a, b: rai_report(a.log_check, b.log_check, th, "M_rai")
    if which == "mg":
        return lambda a, b: mg_report(a.logM, b.logM, th, "M_mg")
    if which == "dc":
        return lambda a, b: dc_report(a.logM, b.logM, th, "M_dc")
    if which == "fdb":
        return lambda a, b: fdb_report(a.log_check, b.log_check, th, "M_fdb")
    raise InvalidSpec(which)


def liminf_root_report(s: WeightSequence, th=None) -> ConditionReport:
    """liminf (M̌_j)^{1/j} > 0, via the min over the window [J/2, J] of ln M̌_j / j.

    The trace stores the negated window minimum, so a flat trace witnesses
    a positive liminf and a trace growing like ln J refutes it.
    """
    r = s.log_check[1:] / np.arange(1, s.N + 1)

    def curve(J):
        lo = max(1, J // 2)
        return -float(np.min(r[lo - 1 : J]))

    return traced_report("liminf_root", s.N, curve, th)


def _paired(m: WeightMatrix, which: str, th) -> MatrixConditionReport:
    fn = _pair_fn(which, th)
    memo: dict = {}
    pairing, witness, trace, verdicts = {}, {}, {}, []
    for i, p in enumerate(m.params):
        tried = []
        found = None
        for q, row_q in zip(m.params[i:], m.rows[i:]):
            key = (id(m.rows[i]), id(row_q))
            if key not in memo:
                memo[key] = fn(m.rows[i], row_q)
            rep = memo[key]
            tried.append(rep)
            if rep.witnessed:
                found = (q, rep)
                break
        if found is not None:
            pairing[p] = found[0]
            witness[p] = found[1].witness
            trace[p] = found[1].trace
            verdicts.append(Verdict.WITNESSED)
        else:
            best = min(tried, key=lambda r: r.trace[-1][1])
            witness[p] = best.witness
            trace[p] = best.trace
            all_fail = all(r.fails for r in tried)
            verdicts.append(Verdict.FAILS if all_fail else Verdict.UNDETERMINED)
    return MatrixConditionReport("M_" + which, combine(verdicts), pairing, witness, trace)


def check_matrix_condition(m: WeightMatrix, which: str,
                           th: Thresholds | None = None) -> MatrixConditionReport:
    """Check one matrix condition; partners p' >= p are scanned in grid order."""
    if which in ("rai", "mg", "dc", "fdb"):
        return _paired(m, which, th)
    if which in ("sc", "lc"):
        conds = ("lc", "normalized", "limit-mj-infinity") if which == "sc" else ("lc",)
        per_row = {}
        verdicts = []
        for p, row in zip(m.params, m.rows):
            reps = [check_condition(row, c, th) for c in conds]
            v = combine([r.verdict for r in reps])
            verdicts.append(v)
            per_row[p] = {r.condition: r.verdict.value for r in reps}
        return MatrixConditionReport("M_" + which, combine(verdicts), {}, per_row, {}, ())
    if which in ("c_omega", "h"):
        reps = {p: liminf_root_report(row, th) for p, row in zip(m.params, m.rows)}
        vs = [r.verdict for r in reps.values()]
        if which == "h":
            verdict = combine(vs)
        elif any(v is Verdict.WITNESSED for v in vs):
            verdict = Verdict.WITNESSED
        elif all(v is Verdict.FAILS for v in vs):
            verdict = Verdict.FAILS
        else:
            verdict = Verdict.UNDETERMINED
        return MatrixConditionReport("M_" + which, verdict, {},
                                     {p: r.witness for p, r in reps.items()},
                                     {p: r.trace for p, r in reps.items()}, ())
    raise InvalidSpec(f"unknown matrix condition {which!r}; expected {MATRIX_CONDITIONS}")


# ------------------------------------------------------------ product lemma

def _composition_table(src: np.ndarray, k_max: int) -> np.ndarray:
    """best[n] = max over compositions of n into at most k_max parts of sum src."""
    n = src.size - 1
    best = np.full(n + 1, -np.inf)
    cur = np.full(n + 1, -np.inf)
    cur[0] = 0.0
    for _ in range(min(k_max, n)):
        nxt = np.full(n + 1, -np.inf)
        for j in range(1, n + 1):
            cand = src[j] + cur[: n + 1 - j]
            nxt[j:] = np.maximum(nxt[j:], cand)
        cur = nxt
        best = np.maximum(best, cur)
    return best


def _enumerated_table(src: np.ndarray, k_max: int) -> np.ndarray:
    n = src.size - 1
    best = np.full(n + 1, -np.inf)
    for k in range(1, min(k_max, n) + 1):
        for total in range(k, n + 1):
            for cuts in itertools.combinations(range(1, total), k - 1):
                bounds = (0,) + cuts + (total,)
                val = sum(src[b - a] for a, b in zip(bounds, bounds[1:]))
                if val > best[total]:
                    best[total] = val
    return best


def tuple_count(n: int, k_max: int) -> int:
    return int(sum(comb(n, k, exact=True) for k in range(1, min(k_max, n) + 1)))


def check_product_lemma(m: WeightMatrix, p: float, k_max: int | None = None,
                        partner: float | None = None,
                        th: Thresholds | None = None) -> ConditionReport:
    """Minimal ln H with M̌^(p)_{j1}...M̌^(p)_{jk} <= H^{sum} M̌^(p')_{sum}."""
    if partner is None:
        rai = check_matrix_condition(m, "rai", th)
        partner = rai.pairing.get(float(p), float(p))
    src = m.row(p).log_check
    dst = m.row(partner).log_check
    n = m.N
    k_max = n if k_max is None else int(k_max)
    count = tuple_count(n, k_max)
    method = "enumeration" if count <= ENUMERATION_LIMIT else "composition DP"
    best = (_enumerated_table if method == "enumeration" else _composition_table)(src, k_max)
    val = (best[1:] - dst[1:]) / np.arange(1, n + 1)
    pm = np.maximum.accumulate(val)
    notes = (f"p={p:g}, partner={partner:g}, k_max={k_max}, {method}",)
    return traced_report("product_lemma", n, lambda J: pm[J - 1], th, "H", None, notes)


# ------------------------------------------------------------ M^alpha

def growth_values(row: WeightSequence, alpha: float) -> np.ndarray:
    """((1 - alpha) j ln j + logM[j]) / j for j = 1..N."""
    j = np.arange(1, row.N + 1, dtype=float)
    return ((1.0 - alpha) * xlogx(j) + row.logM[1:]) / j


def growth_class(row: WeightSequence, alpha: float, th=None) -> str:
    """'+inf', '-inf', 'bounded' or 'unclear' for the growth trace."""
    th = th or Thresholds()
    g = growth_values(row, alpha)
    vals = [float(g[J - 1]) for J in truncations(row.N)]
    if judge_divergence(vals, th) is Verdict.WITNESSED:
        return "+inf"
    if judge_divergence([-v for v in vals], th) is Verdict.WITNESSED:
        return "-inf"
    if abs(vals[3] - vals[1]) <= th.tau_stab * max(1.0, abs(vals[1])):
        return "bounded"
    return "unclear"


def build_m_alpha(m: WeightMatrix, alpha: float, th=None,
                  check_gate: bool = True) -> WeightMatrix:
    """Rows j^{(alpha-1)j} (Ḡ^{1-alpha} M^(p))^lc."""
    if not 0 < alpha <= 1:
        raise InvalidSpec("build_m_alpha needs 0 < alpha <= 1")
    shift = (1.0 - alpha) * xlogx(np.arange(m.N + 1))
    rows = []
    for p, row in zip(m.params, m.rows):
        if check_gate:
            cls = growth_class(row, alpha, th)
            if cls != "+inf":
                raise GrowthGateFailed(p, f"row p={p:g}: growth trace is {cls}, not -> +inf")
        lifted = WeightSequence(row.logM + shift, row.label, None)
        lc = log_convex_minorant(lifted)
        if lc.logM is not None and np.array_equal(lc.logM, lifted.logM):
            rows.append(row)
        else:
            rows.append(WeightSequence(lc.logM - shift, f"{row.label}^(a={alpha:g})", None))
    return WeightMatrix(tuple(rows), m.params, ("m_alpha", float(alpha), m.origin))


# ------------------------------------------------------------ R-equivalence

def _direction(m1: WeightMatrix, m2: WeightMatrix, th):
    pairing = {}
    verdicts = []
    for p, row in zip(m1.params, m1.rows):
        found = None
        tried = []
        for q, other in zip(m2.params, m2.rows):
            rep = compare(row, other, th).forward
            tried.append(rep)
            if rep.witnessed:
                found = q
                break
        if found is not None:
            pairing[p] = found
            verdicts.append(Verdict.WITNESSED)
        else:
            verdicts.append(Verdict.FAILS if all(r.fails for r in tried)
                            else Verdict.UNDETERMINED)
    return combine(verdicts), pairing


def r_equivalent(m1: WeightMatrix, m2: WeightMatrix,
                 th: Thresholds | None = None) -> ConditionReport:
    """Both directions of "for all p there is p' with M^(p) ⪯ L^(p')"."""
    if m1.N != m2.N:
        raise InvalidSpec("matrices must share N")
    v1, p1 = _direction(m1, m2, th)
    v2, p2 = _direction(m2, m1, th)
    return ConditionReport("r_equivalent", combine([v1, v2]),
                           {"forward": v1.value, "backward": v2.value,
                            "pairing_forward": p1, "pairing_backward": p2},
                           (), None, (GRID_NOTE,))
