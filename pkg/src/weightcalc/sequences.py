"""Weight sequences in the log domain and their sequence-level conditions.

A weight sequence is stored as logM[j] = ln M_j for j = 0..N with
logM[0] = 0.  Derived views: quotients log m_j = logM[j+1] - logM[j] and
the factorial-normalized sequence logM̌[j] = logM[j] - ln j!.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import gammaln

from .errors import InvalidSpec
from .reports import (ConditionReport, Thresholds, Verdict, combine,
                      judge_divergence, traced_report, truncations)

MIN_N = 8
MAX_N = 1024
MAX_N_CUBIC = 512

CONDITIONS = ("lc", "slc", "normalized", "mg", "dc", "rai", "fdb",
              "limit-mj-infinity")


def xlogx(j) -> np.ndarray:
    """j ln j with the convention 0 ln 0 = 0."""
    j = np.asarray(j, dtype=float)
    return np.where(j > 0, j * np.log(np.where(j > 0, j, 1.0)), 0.0)


def log_factorial(n: int) -> np.ndarray:
    """ln j! for j = 0..n."""
    return gammaln(np.arange(n + 1) + 1.0)


def _generator_values(gen: tuple, n: int) -> np.ndarray:
    j = np.arange(n + 1, dtype=float)
    kind = gen[0]
    if kind == "gevrey":
        return gen[1] * gammaln(j + 1.0)
    if kind == "gevrey_bar":
        return gen[1] * xlogx(j)
    if kind == "qgevrey":
        return j * j * math.log(gen[1])
    if kind == "product":
        return _generator_values(gen[1], n) + _generator_values(gen[2], n)
    if kind == "quotient":
        return _generator_values(gen[1], n) - _generator_values(gen[2], n)
    if kind == "scaled":
        return gen[2] * _generator_values(gen[1], n)
    raise InvalidSpec(f"generator {kind!r} cannot be extended")


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """Finite log-domain truncation (ln M_0, ..., ln M_N) with M_0 = 1.

    `generator` is a closed-form tag such as ("gevrey", 2.0); it allows the
    sequence to be re-evaluated at a longer truncation with `extend`.
    """

    logM: np.ndarray
    label: str = ""
    generator: tuple | None = None

    def __post_init__(self):
        arr = np.array(self.logM, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise InvalidSpec("logM must be a 1-d array with at least two entries")
        if not np.all(np.isfinite(arr)):
            raise InvalidSpec("logM entries must be finite")
        if arr[0] != 0.0:
            raise InvalidSpec("logM[0] must be 0 (M_0 = 1)")
        arr.setflags(write=False)
        object.__setattr__(self, "logM", arr)

    @property
    def N(self) -> int:
        return self.logM.size - 1

    @property
    def log_check(self) -> np.ndarray:
        """ln M̌_j = ln(M_j / j!)."""
        return self.logM - log_factorial(self.N)

    def __len__(self):
        return self.logM.size

    def __repr__(self):
        return f"WeightSequence({self.label or 'table'}, N={self.N})"

    def to_dict(self) -> dict:
        return {"label": self.label, "N": self.N, "logM": self.logM.tolist()}


def _check_n(n: int) -> int:
    if int(n) != n or n < MIN_N:
        raise InvalidSpec(f"N must be an integer >= {MIN_N}, got {n}")
    if n > MAX_N:
        raise InvalidSpec(f"N must be <= {MAX_N}")
    return int(n)


def gevrey(a: float, n: int = 64) -> WeightSequence:
    """G^a = (j!^a)."""
    n = _check_n(n)
    gen = ("gevrey", float(a))
    return WeightSequence(_generator_values(gen, n), f"G^{a:g}", gen)


def gevrey_bar(a: float, n: int = 64) -> WeightSequence:
    """Ḡ^a = (j^{ja}) with 0^0 = 1."""
    n = _check_n(n)
    gen = ("gevrey_bar", float(a))
    return WeightSequence(_generator_values(gen, n), f"Gbar^{a:g}", gen)


def qgevrey(q: float, n: int = 64) -> WeightSequence:
    """q-Gevrey sequence (q^{j^2}), q > 1."""
    n = _check_n(n)
    if not q > 1:
        raise InvalidSpec("q-Gevrey needs q > 1")
    gen = ("qgevrey", float(q))
    return WeightSequence(_generator_values(gen, n), f"qGevrey^{q:g}", gen)


def table(values, label: str = "table") -> WeightSequence:
    values = np.asarray(values, dtype=float)
    _check_n(values.size - 1)
    if values[0] != 0:
        raise InvalidSpec("table must start with logM[0] = 0")
    return WeightSequence(values, label, None)


def make_sequence(spec: dict) -> WeightSequence:
    """Build a sequence from a JSON-style spec.

    Kinds: gevrey (a), gevrey_bar (a), qgevrey (q), table (logM),
    product / quotient (left, right).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidSpec("sequence spec must be an object with a 'kind'")
    kind = spec["kind"]
    n = spec.get("N", 64)
    if kind == "gevrey":
        return gevrey(float(spec["a"]), n)
    if kind == "gevrey_bar":
        return gevrey_bar(float(spec["a"]), n)
    if kind == "qgevrey":
        return qgevrey(float(spec["q"]), n)
    if kind == "table":
        return table(spec["logM"], spec.get("label", "table"))
    if kind in ("product", "quotient"):
        left = make_sequence({"N": n, **spec["left"]})
        right = make_sequence({"N": n, **spec["right"]})
        op = pointwise_product if kind == "product" else pointwise_quotient
        return op(left, right)
    raise InvalidSpec(f"unknown sequence kind {kind!r}")


def extend(s: WeightSequence, n: int) -> WeightSequence:
    """Re-evaluate a closed-form sequence at truncation n."""
    if s.generator is None:
        raise InvalidSpec(f"{s!r} has no closed-form generator")
    if n <= s.N:
        return WeightSequence(s.logM[: n + 1], s.label, s.generator)
    return WeightSequence(_generator_values(s.generator, n), s.label, s.generator)


def unit_sequence(n: int = 64) -> WeightSequence:
    return gevrey_bar(0.0, n)


def quotients(s: WeightSequence) -> np.ndarray:
    """log m_j = logM[j+1] - logM[j], j = 0..N-1."""
    return np.diff(s.logM)


def from_quotients(log_m) -> np.ndarray:
    """Inverse of `quotients`: cumulative sums starting at 0."""
    return np.concatenate(([0.0], np.cumsum(np.asarray(log_m, dtype=float))))


def _combine(s, t, sign, kind):
    if s.N != t.N:
        raise InvalidSpec("sequences must share N")
    gen = None
    if s.generator is not None and t.generator is not None:
        gen = (kind, s.generator, t.generator)
    sym = "*" if sign > 0 else "/"
    return WeightSequence(s.logM + sign * t.logM, f"{s.label}{sym}{t.label}", gen)


def pointwise_product(s: WeightSequence, t: WeightSequence) -> WeightSequence:
    return _combine(s, t, 1.0, "product")


def pointwise_quotient(s: WeightSequence, t: WeightSequence) -> WeightSequence:
    return _combine(s, t, -1.0, "quotient")


def scaled(s: WeightSequence, c: float) -> WeightSequence:
    """The sequence M^c (logM multiplied by c)."""
    gen = ("scaled", s.generator, float(c)) if s.generator is not None else None
    return WeightSequence(c * s.logM, f"({s.label})^{c:g}", gen)


# ---------------------------------------------------------------- conditions

def _lc_site(values: np.ndarray, tol: float = 1e-12):
    """First j where the increments of `values` decrease, else None."""
    d = np.diff(values)
    bad = np.nonzero(d[1:] < d[:-1] - tol * (1.0 + np.abs(d[:-1])))[0]
    return None if bad.size == 0 else (int(bad[0]), int(bad[0]) + 1)


def is_log_convex(values, tol: float = 1e-12) -> bool:
    return _lc_site(np.asarray(values, dtype=float), tol) is None


def _exact(condition, ok, site=None, notes=()):
    n_verdict = Verdict.WITNESSED if ok else Verdict.FAILS
    return ConditionReport(condition, n_verdict, {}, (), site, tuple(notes))


def mg_curve(top: np.ndarray, bottom: np.ndarray | None = None) -> np.ndarray:
    """best[n] = max_{j+k=n, j,k>=1} (top[n] - bottom[j] - bottom[k]) / n."""
    bottom = top if bottom is None else bottom
    n_max = top.size - 1
    best = np.full(n_max + 1, -np.inf)
    j = np.arange(1, n_max)
    for n in range(2, n_max + 1):
        jj = j[: n - 1]
        best[n] = np.max(top[n] - bottom[jj] - bottom[n - jj]) / n
    return best


def _prefix_max_curve(values: np.ndarray):
    pm = np.maximum.accumulate(values)
    return lambda J: pm[J]


def mg_report(top, bottom=None, th=None, condition="mg") -> ConditionReport:
    best = mg_curve(np.asarray(top), None if bottom is None else np.asarray(bottom))
    best[:2] = 0.0
    curve = _prefix_max_curve(best)
    n = best.size - 1
    nstar = int(np.argmax(best))
    bottom_arr = np.asarray(top if bottom is None else bottom)
    site = None
    if nstar >= 2:
        jj = np.arange(1, nstar)
        k = int(jj[np.argmax(top[nstar] - bottom_arr[jj] - bottom_arr[nstar - jj])])
        site = (k, nstar - k)
    return traced_report(condition, n, curve, th, "C", site)


def dc_report(top, bottom=None, th=None, condition="dc") -> ConditionReport:
    top = np.asarray(top)
    bottom = top if bottom is None else np.asarray(bottom)
    n = top.size - 1
    val = (top[1:] - bottom[:-1]) / np.arange(1, n + 1)
    pm = np.maximum.accumulate(val)
    j = int(np.argmax(val))
    return traced_report(condition, n, lambda J: pm[J - 1], th, "D", (j, j + 1))


def rai_report(check_src, check_dst=None, th=None, condition="rai") -> ConditionReport:
    """ln H(J) = max over 1 <= j <= k <= J of src[j]/j - dst[k]/k."""
    src = np.asarray(check_src)
    dst = src if check_dst is None else np.asarray(check_dst)
    n = src.size - 1
    idx = np.arange(1, n + 1)
    r_src = src[1:] / idx
    r_dst = dst[1:] / idx
    gap = np.maximum.accumulate(r_src) - r_dst
    pm = np.maximum.accumulate(gap)
    k = int(np.argmax(gap))
    j = int(np.argmax(r_src[: k + 1]))
    return traced_report(condition, n, lambda J: pm[J - 1], th, "H", (j + 1, k + 1))


def faa_di_bruno_log(log_check: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log of M̌° plus the minimizing ℓ for each k (ties to smaller ℓ).

    circ[k] = max over ℓ of a[ℓ] + S_ℓ[k], S_ℓ[k] the best sum of a over
    compositions of k into ℓ positive parts.
    """
    a = np.asarray(log_check, dtype=float)
    n = a.size - 1
    if n > MAX_N_CUBIC:
        raise InvalidSpec(f"Faa di Bruno sequence needs N <= {MAX_N_CUBIC}")
    k = np.arange(n + 1)[:, None]
    j = np.arange(1, n + 1)[None, :]
    prev_idx = k - j
    valid = prev_idx >= 0
    prev_idx = np.where(valid, prev_idx, 0)
    parts = a[1:][None, :]
    s_prev = np.full(n + 1, -np.inf)
    s_prev[0] = 0.0
    circ = np.full(n + 1, -np.inf)
    arg_l = np.zeros(n + 1, dtype=int)
    for ell in range(1, n + 1):
        cand = np.where(valid, parts + s_prev[prev_idx], -np.inf)
        s_cur = cand.max(axis=1)
        total = a[ell] + s_cur
        better = total > circ
        circ = np.where(better, total, circ)
        arg_l = np.where(better, ell, arg_l)
        s_prev = s_cur
    circ[0] = 0.0
    arg_l[0] = 0
    return circ, arg_l


def faa_di_bruno_sequence(s: WeightSequence) -> WeightSequence:
    """The sequence M̌°, returned as a table of ln M̌°."""
    circ, _ = faa_di_bruno_log(s.log_check)
    return WeightSequence(circ, f"FdB({s.label})", None)


def fdb_report(src_check, dst_check=None, th=None, condition="fdb") -> ConditionReport:
    """Minimal ln h with M̌°_j <= h^j M̌'_j (C = 1), traced over J."""
    src = np.asarray(src_check)
    dst = src if dst_check is None else np.asarray(dst_check)
    circ, _ = faa_di_bruno_log(src)
    n = src.size - 1
    val = (circ[1:] - dst[1:]) / np.arange(1, n + 1)
    pm = np.maximum.accumulate(val)
    j = int(np.argmax(val)) + 1
    rep = traced_report(condition, n, lambda J: pm[J - 1], th, "h", (j, j))
    return ConditionReport(rep.condition, rep.verdict, {"C": 1.0, **rep.witness},
                           rep.trace, rep.failure_site, rep.notes)


def check_fdb(s: WeightSequence, th: Thresholds | None = None) -> ConditionReport:
    return fdb_report(s.log_check, None, th)


def limit_report(s: WeightSequence, th=None) -> ConditionReport:
    q = quotients(s)
    return traced_report("limit-mj-infinity", s.N, lambda J: q[J - 1], th,
                         judge=judge_divergence)


def check_condition(s: WeightSequence, which: str,
                    th: Thresholds | None = None) -> ConditionReport:
    """Check one sequence condition up to the truncation N."""
    if which == "lc":
        site = _lc_site(s.logM)
        return _exact("lc", site is None, site)
    if which == "slc":
        site = _lc_site(s.log_check)
        return _exact("slc", site is None, site)
    if which == "normalized":
        ok = s.logM[1] >= -1e-15
        return _exact("normalized", ok, None if ok else (0, 1))
    if which == "mg":
        return mg_report(s.logM, None, th)
    if which == "dc":
        return dc_report(s.logM, None, th)
    if which == "rai":
        return rai_report(s.log_check, None, th)
    if which == "fdb":
        return check_fdb(s, th)
    if which == "limit-mj-infinity":
        return limit_report(s, th)
    raise InvalidSpec(f"unknown condition {which!r}; expected one of {CONDITIONS}")


# ---------------------------------------------------------------- comparison

def sup_ratio_curve(log_a, log_b) -> np.ndarray:
    """Prefix maxima of (log_a[j] - log_b[j]) / j for j = 1..n (index j-1)."""
    a = np.asarray(log_a, dtype=float)
    b = np.asarray(log_b, dtype=float)
    n = min(a.size, b.size) - 1
    val = (a[1 : n + 1] - b[1 : n + 1]) / np.arange(1, n + 1)
    # NaN marks an index to skip (e.g. a vanishing derivative)
    pm = np.fmax.accumulate(val)
    pm[np.isnan(pm)] = -np.inf
    return pm


def preceq_report(log_a, log_b, th=None) -> ConditionReport:
    """M ⪯ L: sup_j (M_j / L_j)^{1/j} finite, traced in the log domain."""
    pm = sup_ratio_curve(log_a, log_b)
    n = pm.size
    rep = traced_report("preceq", n, lambda J: pm[J - 1], th)
    w = {"ln_B": rep.trace[-1][1], "B": math.exp(min(rep.trace[-1][1], 700.0))}
    return ConditionReport("preceq", rep.verdict, w, rep.trace, None, rep.notes)


@dataclass(frozen=True)
class Comparison:
    """Both directions of ⪯ and the resulting ≈ verdict."""

    forward: ConditionReport
    backward: ConditionReport
    equiv: ConditionReport

    @property
    def verdict(self) -> Verdict:
        return self.equiv.verdict

    def to_dict(self) -> dict:
        return {"forward": self.forward.to_dict(), "backward": self.backward.to_dict(),
                "equiv": self.equiv.to_dict()}


def compare_logs(log_a, log_b, th=None) -> Comparison:
    fwd = preceq_report(log_a, log_b, th)
    bwd = preceq_report(log_b, log_a, th)
    trace = tuple((J, max(u, v)) for (J, u), (_, v) in zip(fwd.trace, bwd.trace))
    eq = ConditionReport("equiv", combine([fwd.verdict, bwd.verdict]),
                         {"ln_B_forward": fwd.witness["ln_B"],
                          "ln_B_backward": bwd.witness["ln_B"]}, trace)
    return Comparison(fwd, bwd, eq)


def compare(s: WeightSequence, t: WeightSequence,
            th: Thresholds | None = None) -> Comparison:
    """Compare two sequences up to their common truncation."""
    return compare_logs(s.logM, t.logM, th)
