"""Weight functions, associated functions of sequences, conjugates.

Weight functions are handled through phi(y) = omega(e^y) and, for ratio
conditions that would overflow, through ln phi(y).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ArgmaxOnBoundary, DomainExceeded, InvalidSpec
from .reports import (ConditionReport, Thresholds, Verdict, judge_trace,
                      judge_vanishing, traced_report, truncations)
from .sequences import WeightSequence, is_log_convex, make_sequence, scaled

GRID_PER_DECADE = 512
GRID_STEP = math.log(10.0) / GRID_PER_DECADE
DEFAULT_T_MAX = 1e8
# closed forms are exact everywhere; their default domain reaches e^690
CLOSED_FORM_LOG_T_MAX = 690.0
ALPHA0_T0 = 10.0
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """A nondecreasing weight omega with omega(0) = 0 on [0, t_max].

    `phi_fn(y)` returns omega(e^y) for an array y; `log_phi_fn` returns
    its logarithm (-inf where omega vanishes).  `convex` records whether
    y -> omega(e^y) is known to be convex (needed for ternary search).
    `tail_slope` is a lower bound for the slope of phi beyond y_max when
    known (from a backing sequence), else None.
    """

    form: str
    label: str
    log_t_max: float
    normalized: bool
    phi_fn: Callable = field(repr=False)
    log_phi_fn: Callable = field(repr=False)
    convex: bool | None = None
    tail_slope: float | None = None
    spec: dict = field(default_factory=dict, repr=False)
    sequence: WeightSequence | None = field(default=None, repr=False)

    @property
    def t_max(self) -> float:
        return math.exp(min(self.log_t_max, 709.0))

    @property
    def y_max(self) -> float:
        return self.log_t_max

    def _check(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y > self.log_t_max + 1e-12):
            raise DomainExceeded(
                f"{self.label}: ln t = {float(np.max(y)):.6g} beyond validated "
                f"ln t_max = {self.log_t_max:.6g}")
        return y

    def phi(self, y):
        return self.phi_fn(self._check(y))

    def log_phi(self, y):
        return self.log_phi_fn(self._check(y))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        safe = np.where(t > 0, t, 1.0)
        out = self.phi(np.log(safe))
        return np.where(t > 0, out, 0.0)

    def to_dict(self) -> dict:
        return {"form": self.form, "label": self.label, "ln_t_max": self.log_t_max,
                "normalized": self.normalized, "spec": self.spec}


def _safe_log(v):
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(v > 0, np.log(np.where(v > 0, v, 1.0)), -np.inf)


def _normalize(phi, log_phi):
    """Shift a closed form so that it vanishes on [0, 1]."""
    base = float(phi(np.array([0.0]))[0])

    def nphi(y):
        y = np.asarray(y, dtype=float)
        return np.where(y > 0, phi(np.maximum(y, 0.0)) - base, 0.0)

    def nlog(y):
        y = np.asarray(y, dtype=float)
        lp = log_phi(np.maximum(y, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = lp + np.log1p(-np.minimum(base * np.exp(-lp), 1.0))
        return np.where(y > 0, out, -np.inf)

    return nphi, nlog


def closed_form(tag: str, normalized: bool | None = None,
                log_t_max: float = CLOSED_FORM_LOG_T_MAX, **params) -> WeightFunction:
    """Registry of closed-form weights.

    log_square  max(0, ln t)^2 / (4 ln q)       params q (default e)
    power       t^p                              params p
    linear_log  t ln(e + t)                      no params
    With normalized=True the weight is replaced by max(0, omega(t) - omega(1)).
    """
    if tag == "log_square":
        q = float(params.get("q", math.e))
        if not q > 1:
            raise InvalidSpec("log_square needs q > 1")
        c = 1.0 / (4.0 * math.log(q))

        def phi(y):
            y = np.maximum(np.asarray(y, dtype=float), 0.0)
            return c * y * y

        def log_phi(y):
            return 2.0 * _safe_log(np.asarray(y, dtype=float)) + math.log(c)

        label = f"log_square(q={q:g})"
        params = {"q": q}
        normalized = True if normalized is None else normalized
        native_normal = True
    elif tag == "power":
        p = float(params["p"])
        if not p > 0:
            raise InvalidSpec("power weight needs p > 0")

        def phi(y):
            with np.errstate(over="ignore"):
                return np.exp(p * np.asarray(y, dtype=float))

        def log_phi(y):
            return p * np.asarray(y, dtype=float)

        label = f"power(p={p:g})"
        params = {"p": p}
        native_normal = False
    elif tag == "linear_log":
        def phi(y):
            y = np.asarray(y, dtype=float)
            with np.errstate(over="ignore"):
                return np.exp(y) * np.logaddexp(1.0, y)

        def log_phi(y):
            y = np.asarray(y, dtype=float)
            return y + np.log(np.logaddexp(1.0, y))

        label = "linear_log"
        params = {}
        native_normal = False
    else:
        raise InvalidSpec(f"unknown closed-form tag {tag!r}")
    normalized = bool(normalized)
    if normalized and not native_normal:
        phi, log_phi = _normalize(phi, log_phi)
        label += ",normalized"
    spec = {"kind": "closed_form", "tag": tag, **params, "normalized": normalized}
    return WeightFunction("closed_form", label, float(log_t_max), normalized or native_normal,
                          phi, log_phi, True, None, spec)


def tabulated(t, values, label: str = "table") -> WeightFunction:
    """Weight given by samples; linear interpolation in ln t."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != w.shape or t.size < 2:
        raise InvalidSpec("table needs matching 1-d t and omega arrays")
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise InvalidSpec("t grid must be positive and strictly increasing")
    if np.any(np.diff(w) < 0) or w[0] < 0:
        raise InvalidSpec("omega table must be nonnegative and nondecreasing")
    if w[-1] <= 0:
        raise InvalidSpec("omega(t_max) must be positive")
    ys = np.log(t)

    def phi(y):
        y = np.asarray(y, dtype=float)
        inside = np.interp(y, ys, w)
        below = w[0] * np.exp(np.minimum(y - ys[0], 0.0))
        return np.where(y < ys[0], below, inside)

    def log_phi(y):
        return _safe_log(phi(y))

    normalized = bool(ys[0] <= 0 and np.all(w[ys <= 0] == 0))
    y2 = np.diff(w) / np.diff(ys)
    convex = bool(np.all(np.diff(y2) >= -1e-12 * (1 + np.abs(y2[:-1]))))
    spec = {"kind": "table", "t": t.tolist(), "omega": w.tolist()}
    return WeightFunction("tabulated", label, float(ys[-1]), normalized, phi,
                          log_phi, convex, None, spec)


def from_sequence(s: WeightSequence) -> WeightFunction:
    """omega_M, valid up to the last quotient of the log-convex minorant."""
    lc = log_convex_minorant(s)
    bound = float(lc.logM[-1] - lc.logM[-2])
    j = np.arange(s.N + 1, dtype=float)
    logm = s.logM

    def phi(y):
        y = np.asarray(y, dtype=float)
        vals = np.max(np.outer(y.ravel(), j) - logm[None, :], axis=1)
        return np.maximum(vals, 0.0).reshape(y.shape)

    def log_phi(y):
        return _safe_log(phi(y))

    normalized = bool(logm[1] >= 0 and is_log_convex(logm))
    spec = {"kind": "from_sequence", "sequence": {"kind": "table", "logM": logm.tolist()}}
    return WeightFunction("from_sequence", f"omega[{s.label}]", bound, normalized,
                          phi, log_phi, True, float(s.N), spec, s)


def power_of(w: WeightFunction, a: float) -> WeightFunction:
    """omega^a(t) = omega(t^a)."""
    if not a > 0:
        raise InvalidSpec("exponent must be positive")

    def phi(y):
        return w.phi_fn(a * np.asarray(y, dtype=float))

    def log_phi(y):
        return w.log_phi_fn(a * np.asarray(y, dtype=float))

    tail = None if w.tail_slope is None else w.tail_slope * a
    spec = {"kind": "power_of", "base": w.spec, "a": a}
    return WeightFunction(w.form, f"({w.label})^{a:g}", w.log_t_max / a, w.normalized,
                          phi, log_phi, w.convex, tail, spec, None)


def make_weight_function(spec: dict) -> WeightFunction:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidSpec("weight function spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "closed_form":
        extra = {k: v for k, v in spec.items() if k not in ("kind", "tag")}
        if "t_max" in extra:
            extra["log_t_max"] = math.log(float(extra.pop("t_max")))
        return closed_form(spec["tag"], **extra)
    if kind == "table":
        return tabulated(spec["t"], spec["omega"], spec.get("label", "table"))
    if kind == "from_sequence":
        return from_sequence(make_sequence(spec["sequence"]))
    if kind == "power_of":
        return power_of(make_weight_function(spec["base"]), float(spec["a"]))
    raise InvalidSpec(f"unknown weight function kind {kind!r}")


# ------------------------------------------------------------ sequences side

def _lower_hull(x: np.ndarray, y: np.ndarray, tol: float) -> list[int]:
    """Indices of the lower convex hull; collinear points within tol are kept."""
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            chord = y[a] + (y[i] - y[a]) * (x[b] - x[a]) / (x[i] - x[a])
            if y[b] > chord + tol * (1.0 + abs(chord)):
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def log_convex_minorant(s: WeightSequence) -> WeightSequence:
    """Lower convex envelope of the points (j, logM[j]) at integer j."""
    y = s.logM
    x = np.arange(y.size, dtype=float)
    hull = _lower_hull(x, y, 1e-13)
    out = np.interp(x, x[hull], y[hull])
    out[hull] = y[hull]
    gen = s.generator if len(hull) == y.size else None
    label = s.label if len(hull) == y.size else f"lc({s.label})"
    return WeightSequence(out, label, gen)


def sequence_validity_bound(s: WeightSequence) -> float:
    """ln of the largest t at which the truncated sup defining omega_M is exact."""
    lc = log_convex_minorant(s)
    return float(lc.logM[-1] - lc.logM[-2])


def omega_of_sequence(s: WeightSequence, t):
    """omega_M(t) = max_j (j ln t - logM[j]), clamped below at 0."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainExceeded("t must be nonnegative")
    bound = sequence_validity_bound(s)
    with np.errstate(divide="ignore"):
        y = np.log(t_arr)
    if np.any(y > bound + 1e-12):
        raise DomainExceeded(
            f"t beyond m_(N-1) = exp({bound:.6g}); truncation cannot witness the sup")
    j = np.arange(s.N + 1, dtype=float)
    yy = np.where(t_arr > 0, y, 0.0).ravel()
    vals = np.max(np.outer(yy, j) - s.logM[None, :], axis=1).reshape(t_arr.shape)
    out = np.where(t_arr > 0, np.maximum(vals, 0.0), 0.0)
    return float(out) if out.ndim == 0 else out


def power_transform(s: WeightSequence, beta: float, t: float) -> tuple[float, float]:
    """Both sides of omega_M(t^beta) = beta * omega_{M^{1/beta}}(t)."""
    if not beta > 0:
        raise InvalidSpec("beta must be positive")
    lhs = omega_of_sequence(s, t ** beta)
    rhs = beta * omega_of_sequence(scaled(s, 1.0 / beta), t)
    return float(lhs), float(rhs)


# ------------------------------------------------------------ maximization

def _golden_max(f, a: float, b: float, tol: float = 1e-12, iters: int = 200):
    """Maximize a unimodal scalar function on [a, b]."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a <= tol * max(1.0, abs(a), abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    cands = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    best = max(cands, key=lambda p: p[0])
    return best[1], best[0]


def log_grid(y_lo: float, y_hi: float, step: float = GRID_STEP) -> np.ndarray:
    n = max(2, int(math.ceil((y_hi - y_lo) / step)) + 1)
    return np.linspace(y_lo, y_hi, n)


def _scalar_phi(w: WeightFunction):
    return lambda y: float(w.phi_fn(np.array([y]))[0])


def _refined_sup(w: WeightFunction, slope: float, ys: np.ndarray, vals: np.ndarray,
                 allow_top: bool, allow_bottom: bool):
    i = int(np.argmax(vals))
    last = ys.size - 1
    if (i == last and not allow_top) or (i == 0 and not allow_bottom):
        where = "upper" if i == last else "lower"
        raise ArgmaxOnBoundary(
            f"{w.label}: sup of {slope:g}*y - phi(y) sits at the {where} grid end")
    lo, hi = ys[max(i - 1, 0)], ys[min(i + 1, last)]
    f = _scalar_phi(w)
    y, v = _golden_max(lambda u: slope * u - f(u), lo, hi)
    return (y, v) if v >= vals[i] else (ys[i], float(vals[i]))


def recover_sequence(w: WeightFunction, n: int) -> WeightSequence:
    """logM[j] = sup_t (j ln t - omega(t)), the sequence encoded by omega."""
    y_lo = -10.0
    if w.sequence is not None:
        first = float(log_convex_minorant(w.sequence).logM[1])
        y_lo = min(0.0, first) - 1.0
    ys = log_grid(y_lo, w.y_max)
    phis = w.phi(ys)
    out = np.zeros(n + 1)
    for j in range(1, n + 1):
        vals = j * ys - phis
        top_ok = w.tail_slope is not None and j <= w.tail_slope
        _, v = _refined_sup(w, j, ys, vals, top_ok, False)
        out[j] = v
    return WeightSequence(out, f"recovered[{w.label}]", None)


def legendre_conjugate(w: WeightFunction, x: float) -> float:
    """phi*(x) = sup over 0 <= y <= ln t_max of (x y - omega(e^y))."""
    if x < 0:
        raise InvalidSpec("conjugate is taken at x >= 0")
    f = _scalar_phi(w)
    top = w.y_max
    if w.convex:
        y, v = _golden_max(lambda u: x * u - f(u), 0.0, top)
        if top - y <= 1e-9 * max(1.0, top):
            raise ArgmaxOnBoundary(f"{w.label}: conjugate at x={x:g} needs y > ln t_max")
        return float(v)
    ys = log_grid(0.0, top)
    vals = x * ys - w.phi(ys)
    _, v = _refined_sup(w, x, ys, vals, False, True)
    return float(v)


# ------------------------------------------------------------ conditions

def condition_grid(w: WeightFunction, y_top: float | None = None) -> np.ndarray:
    top = w.y_max if y_top is None else min(y_top, w.y_max)
    return log_grid(0.0, top)


def _trace_at(values: np.ndarray, condition: str, th, judge=judge_trace,
              witness=None, notes=()):
    n = values.size
    return traced_report(condition, n, lambda J: values[J - 1], th, witness,
                         None, notes, judge)


def _alpha0_report(w: WeightFunction, ys: np.ndarray, th, t0: float) -> ConditionReport:
    """(alpha0) as almost-decrease of omega(t)/t on t >= t0."""
    sub = ys[ys >= math.log(t0)]
    log_psi = w.log_phi(sub) - sub
    gap = log_psi - np.minimum.accumulate(log_psi)
    curve = np.maximum.accumulate(gap)
    note = (f"omega(s)/s <= C omega(t)/t over grid pairs t0={t0:g} <= t <= s",)
    return _trace_at(curve, "alpha0", th, witness="C", notes=note)


def check_omega_conditions(w: WeightFunction, th: Thresholds | None = None,
                           y_top: float | None = None,
                           t0: float = ALPHA0_T0) -> dict[str, ConditionReport]:
    """Finite-grid reports for (omega0)..(omega6) and (alpha0)."""
    ys = condition_grid(w, y_top)
    top = ys[-1]
    phis = w.phi(ys)
    logs = w.log_phi(ys)
    out: dict[str, ConditionReport] = {}

    neg = w.phi(np.linspace(-10.0, 0.0, 64))
    ok0 = bool(np.all(neg == 0) and np.all(phis[1:] >= phis[:-1] * (1.0 - 1e-12))
               and phis[-1] > 0)
    out["omega0"] = ConditionReport("omega0", Verdict.WITNESSED if ok0 else Verdict.FAILS)

    sub = ys[ys <= top - math.log(2.0)]
    ratio = w.log_phi(sub + math.log(2.0)) - np.logaddexp(w.log_phi(sub), 0.0)
    out["omega1"] = _trace_at(np.maximum.accumulate(ratio), "omega1", th, witness="L")

    with np.errstate(invalid="ignore"):
        lin = logs - ys
    out["omega2"] = _trace_at(np.maximum.accumulate(lin), "omega2", th, witness="C")

    pos = ys > 0
    with np.errstate(over="ignore", invalid="ignore"):
        r3 = np.exp(np.log(ys[pos]) - logs[pos])
    out["omega3"] = _trace_at(np.nan_to_num(r3, nan=np.inf), "omega3", th, judge_vanishing)

    out["omega4"] = _convexity_report(phis, logs)
    out["omega5"] = _trace_at(np.exp(lin), "omega5", th, judge_vanishing)
    out["omega6"] = _omega6_report(w, ys, th)
    out["alpha0"] = _alpha0_report(w, ys, th, t0)
    return out


def _convexity_report(phis: np.ndarray, logs: np.ndarray) -> ConditionReport:
    """Exact second-difference test of y -> omega(e^y) on the grid."""
    finite = np.isfinite(phis)
    bad = None
    mid = np.arange(1, phis.size - 1)
    pos = np.isfinite(logs[mid])
    with np.errstate(over="ignore", invalid="ignore"):
        rel = np.exp(logs[mid + 1] - logs[mid]) + np.exp(logs[mid - 1] - logs[mid]) - 2.0
        raw = phis[mid + 1] + phis[mid - 1] - 2.0 * phis[mid]
    viol = np.where(pos, rel < -1e-9, raw < -1e-12)
    viol &= finite[mid]
    if np.any(viol):
        i = int(mid[np.argmax(viol)])
        bad = (i - 1, i + 1)
    return ConditionReport("omega4", Verdict.FAILS if bad else Verdict.WITNESSED, {}, (),
                           bad, ("second differences of omega(e^y) on the grid",))


def _omega6_report(w: WeightFunction, ys: np.ndarray, th) -> ConditionReport:
    """Minimal H on the grid H = 2^(k/4) with 2 omega(t) <= omega(Ht) + H."""
    top = ys[-1]
    half = ys[ys <= top / 2.0]
    if half.size < 8:
        half = ys[: max(8, ys.size // 2)]
    lp = w.log_phi(half)
    k_max = int((top - half[-1]) / (0.25 * math.log(2.0)))
    js = truncations(half.size)
    best = {J: math.inf for J in js}
    for k in range(0, k_max + 1):
        log_h = 0.25 * k * math.log(2.0)
        rhs = np.logaddexp(w.log_phi(half + log_h), log_h)
        ok = math.log(2.0) + lp <= rhs + 1e-12
        for J in js:
            if best[J] == math.inf and np.all(ok[:J]):
                best[J] = log_h
        if all(v < math.inf for v in best.values()):
            break
    vals = [best[J] for J in js]
    verdict = judge_trace(vals, th)
    witness = {"ln_H": vals[-1]}
    return ConditionReport("omega6", verdict, witness, tuple(zip(js, vals)))


def check_omega_condition(w: WeightFunction, which: str, th=None, **kw) -> ConditionReport:
    return check_omega_conditions(w, th, **kw)[which]


# ------------------------------------------------------------ matrix M_omega

DEFAULT_ELL_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)


def conjugate_row(w: WeightFunction, ell: float, n: int) -> np.ndarray:
    """log W^(ell)_j = phi*(ell j) / ell for j = 0..n."""
    out = np.zeros(n + 1)
    for j in range(1, n + 1):
        out[j] = legendre_conjugate(w, ell * j) / ell
    out[0] = legendre_conjugate(w, 0.0) / ell
    return out


def sandwich_report(w: WeightFunction, row: WeightSequence, ell: float,
                    th=None) -> ConditionReport:
    """ell*omega_W <= omega <= 2*ell*omega_W + D_ell on the shared grid."""
    top = min(sequence_validity_bound(row), w.y_max)
    ys = log_grid(0.0, max(top, 1e-3))
    wv = w.phi(ys)
    ow = omega_of_sequence(row, np.exp(ys))
    left = float(np.max(ell * ow - wv))
    gap = np.maximum.accumulate(wv - 2.0 * ell * ow)
    rep = _trace_at(gap, "sandwich", th)
    verdict = rep.verdict if left <= 1e-7 * max(1.0, float(np.max(wv))) else Verdict.FAILS
    witness = {"D": rep.trace[-1][1], "left_violation": max(left, 0.0)}
    return ConditionReport("sandwich", verdict, witness, rep.trace, None,
                           (f"ell={ell:g}",))


def matrix_from_omega(w: WeightFunction, ell_grid=DEFAULT_ELL_GRID, n: int = 64,
                      th: Thresholds | None = None):
    """The weight matrix W^(ell)_j = exp(phi*(ell j)/ell) with post-checks."""
    from .matrices import WeightMatrix

    grid = tuple(float(v) for v in ell_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] <= 0:
        raise InvalidSpec("ell grid must be positive and strictly increasing")
    rows = []
    for ell in grid:
        logw = conjugate_row(w, ell, n)
        if abs(logw[0]) > 1e-9:
            raise InvalidSpec(f"{w.label} is not normalized: W_0 != 1")
        logw[0] = 0.0
        if not is_log_convex(logw, 1e-9):
            raise InvalidSpec(f"row ell={ell:g} is not log-convex: conjugate inaccurate")
        rows.append(WeightSequence(logw, f"W^({ell:g})[{w.label}]", None))
    checks = {}
    for ell, row in zip(grid, rows):
        checks[f"sandwich[{ell:g}]"] = sandwich_report(w, row, ell, th)
    for ell, row in zip(grid, rows):
        if 2 * ell in grid:
            other = rows[grid.index(2 * ell)].logM
            top = row.logM
            worst = max(float(np.max(top[m] - other[1:m] - other[m - 1:0:-1]))
                        for m in range(2, n + 1))
            ok = worst <= 1e-9
            checks[f"moderate_growth[{ell:g}->{2 * ell:g}]"] = ConditionReport(
                "moderate_growth", Verdict.WITNESSED if ok else Verdict.FAILS,
                {"max_excess": worst})
    return WeightMatrix(tuple(rows), grid, ("from_omega", w.spec), checks)


def exp_absorb_report(w: WeightFunction, ell: float, h: float, a: float,
                      n: int = 64, th=None) -> ConditionReport:
    """max_j (j ln h + log W^(ell)_j - log W^(a ell)_j), traced over J."""
    low = conjugate_row(w, ell, n)
    high = conjugate_row(w, a * ell, n)
    val = np.arange(n + 1) * math.log(h) + low - high
    pm = np.maximum.accumulate(val)
    return traced_report("exp_absorb", n, lambda J: pm[J], th, "D", None,
                         (f"h={h:g}, ell={ell:g}, A={a:g}",))
