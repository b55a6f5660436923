"""Characteristic functions in sectors and the derivative-at-0 machinery.

Everything here works either with exact jets (derivatives at the origin,
stored as log-magnitude plus a unit phase so large factorials do not
overflow) or with short, guarded series and quadratures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from scipy.special import gammaln, gammaincc, loggamma

from .errors import (AdmissibilityFailed, InvalidSpec, NoFiniteH, OutsideSector,
                     ReliabilityExceeded, TruncationInsufficient)
from .reports import Thresholds, Verdict, _jsonable
from .sequences import WeightSequence, compare_logs, extend, is_log_convex, quotients

ML_RADIUS = 30.0
ML_TERM_EPS = 1e-14
FDB_MAX_ORDER = 24
G_MAX_ORDER = 16
QUAD_TOL = 1e-10
TAIL_TOL = 1e-12
R_EPS = 1e-10


# ------------------------------------------------------------------ types

@dataclass(frozen=True)
class Jet:
    """Derivatives f^(j)(0), j = 0..N.

    Stored as log|f^(j)(0)| (``-inf`` for an exact zero) and a unit phase.
    """

    log_abs: np.ndarray
    phase: np.ndarray
    source: str = "Table"

    def __post_init__(self):
        la = np.asarray(self.log_abs, dtype=float).copy()
        ph = np.asarray(self.phase, dtype=complex).copy()
        if la.ndim != 1 or la.shape != ph.shape or la.size == 0:
            raise InvalidSpec("jet arrays must be 1-d of equal, positive length")
        if not np.isfinite(la[0]) and la[0] != -np.inf:
            raise InvalidSpec("derivs[0] must be finite")
        la.flags.writeable = False
        ph.flags.writeable = False
        object.__setattr__(self, "log_abs", la)
        object.__setattr__(self, "phase", ph)

    @classmethod
    def from_values(cls, derivs, source: str = "Table") -> "Jet":
        d = np.asarray(derivs, dtype=complex)
        mag = np.abs(d)
        with np.errstate(divide="ignore"):
            la = np.log(mag)
        ph = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
        return cls(la, ph, source)

    @property
    def N(self) -> int:
        return self.log_abs.size - 1

    @property
    def derivs(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.phase * np.exp(self.log_abs)

    def to_dict(self) -> dict:
        return _jsonable({"source": self.source, "derivs": list(self.derivs)})


@dataclass(frozen=True)
class SectorPoint:
    """Point r e^{i theta} on the Riemann surface of the logarithm."""

    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.r >= 0 or not math.isfinite(self.r):
            raise InvalidSpec("sector point modulus must be finite and >= 0")

    @classmethod
    def from_complex(cls, z: complex) -> "SectorPoint":
        z = complex(z)
        return cls(abs(z), math.atan2(z.imag, z.real) if z != 0 else 0.0)

    @property
    def z(self) -> complex:
        return self.r * complex(math.cos(self.theta), math.sin(self.theta))

    def in_sector(self, alpha: float) -> bool:
        return abs(self.theta) < alpha * math.pi / 2


def _as_point(z) -> SectorPoint:
    return z if isinstance(z, SectorPoint) else SectorPoint.from_complex(z)


@dataclass(frozen=True)
class MembershipCertificate:
    sequence: WeightSequence
    h: float
    norm: float
    basis: str  # "JetOnly" or "SampledSup"
    evidence: Verdict = Verdict.WITNESSED
    notes: tuple = ()

    def to_dict(self) -> dict:
        return _jsonable({"sequence": self.sequence.label, "h": self.h,
                          "norm": self.norm, "basis": self.basis,
                          "evidence": self.evidence.value, "notes": self.notes})


# -------------------------------------------------------- Mittag-Leffler

def _ml_terms(A: complex, B: complex, z: complex, shift: int = 0,
              radius: float = ML_RADIUS) -> Iterator[complex]:
    """Terms of the shift-th derivative of sum z^j / Gamma(Aj+B)."""
    if abs(z) > radius:
        raise ReliabilityExceeded(f"|z| = {abs(z):.4g} beyond reliability radius {radius}")
    lz = np.log(complex(z)) if z != 0 else None
    j = shift
    while True:
        lt = -loggamma(A * j + B) + gammaln(j + 1) - gammaln(j - shift + 1)
        if j - shift > 0:
            if lz is None:
                yield 0j
                j += 1
                continue
            lt = lt + (j - shift) * lz
        yield complex(np.exp(lt))
        j += 1


def _sum_series(terms: Iterator[complex], min_terms: int, eps: float = ML_TERM_EPS,
                max_terms: int = 20000) -> tuple[complex, float]:
    total = 0j
    small = 0
    last = 0.0
    for k, t in enumerate(terms):
        total += t
        last = abs(t)
        small = small + 1 if last < eps * max(abs(total), 1e-300) or last == 0 else 0
        if small >= 3 and k >= min_terms:
            return total, 3 * last + eps * abs(total)
        if k >= max_terms:
            break
    raise ReliabilityExceeded("Mittag-Leffler series did not settle")


def mittag_leffler(A: complex, B: complex, z: complex, radius: float = ML_RADIUS,
                   full_output: bool = False):
    """E_{A,B}(z) by its power series (reliable only for moderate |z|)."""
    if complex(A).real <= 0:
        raise InvalidSpec("Mittag-Leffler needs Re(A) > 0")
    z = complex(z)
    min_terms = int(math.ceil(2 * abs(z) ** (1.0 / complex(A).real))) + 1
    val, err = _sum_series(_ml_terms(A, B, z, 0, radius), min_terms)
    return (val, err) if full_output else val


def e_alpha_derivative(alpha: float, n: int, z: complex, radius: float = ML_RADIUS,
                       full_output: bool = False):
    """n-th derivative of E~_alpha(z) = E_{2-alpha, 4-alpha}(-z), termwise."""
    _check_alpha_narrow(alpha)
    z = complex(z)
    A, B = 2.0 - alpha, 4.0 - alpha
    min_terms = int(math.ceil(2 * abs(z) ** (1.0 / A))) + 1
    val, err = _sum_series(_ml_terms(A, B, -z, n, radius), min_terms)
    val *= (-1) ** n
    return (val, err) if full_output else val


def _check_alpha_narrow(alpha):
    if not 0 < alpha <= 1:
        raise InvalidSpec("alpha must lie in (0, 1]")


def e_alpha_jet(alpha: float, n: int = 64) -> Jet:
    """Exact derivatives at 0: (-1)^j j! / Gamma((2-alpha)(j+1)+2)."""
    _check_alpha_narrow(alpha)
    j = np.arange(n + 1)
    la = gammaln(j + 1) - gammaln((2 - alpha) * (j + 1) + 2)
    return Jet(la, np.where(j % 2 == 0, 1.0, -1.0), f"MittagLeffler({alpha:g})")


def e_alpha_log_bound(alpha: float, n: int) -> float:
    """log of 2 n! e^n / n^{(2-alpha)n}, with 0^0 = 1."""
    if n == 0:
        return math.log(2.0)
    return math.log(2.0) + gammaln(n + 1) + n - (2 - alpha) * n * math.log(n)


def e_alpha_bound_check(alpha: float, n_max: int = 8, radii=(0.1, 1.0, 5.0),
                        thetas=None, radius: float = ML_RADIUS) -> dict:
    """Evaluate |E~_alpha^(n)(z)| / bound on a sector grid; all must be <= 1."""
    _check_alpha_narrow(alpha)
    if thetas is None:
        edge = 0.96 * alpha * math.pi / 2
        thetas = (0.0, edge, -edge)
    rows = []
    worst = 0.0
    for n in range(n_max + 1):
        lb = e_alpha_log_bound(alpha, n)
        for r in radii:
            for th in thetas:
                p = SectorPoint(r, th)
                if not p.in_sector(alpha):
                    raise OutsideSector(f"theta={th} outside S_{alpha}")
                v = e_alpha_derivative(alpha, n, p.z, radius)
                ratio = math.exp(math.log(abs(v)) - lb) if v != 0 else 0.0
                worst = max(worst, ratio)
                rows.append({"n": n, "r": r, "theta": th, "value": v, "ratio": ratio})
    return {"alpha": alpha, "n_max": n_max, "max_ratio": worst,
            "ok": worst <= 1 + 1e-9, "samples": rows}


# ------------------------------------------------------ Laplace-type g

def g_alpha_jet(alpha: float, alpha_prime: float, n: int = 64) -> Jet:
    """Exact derivatives at 0: (-1)^j Gamma((alpha'-1) j + 1)."""
    _check_g_params(alpha, alpha_prime)
    j = np.arange(n + 1)
    la = gammaln((alpha_prime - 1) * j + 1)
    return Jet(la, np.where(j % 2 == 0, 1.0, -1.0),
               f"LaplaceG({alpha:g},{alpha_prime:g})")


def _check_g_params(alpha, alpha_prime):
    if not (alpha > 1 and alpha_prime > alpha):
        raise InvalidSpec("need alpha > 1 and alpha' > alpha")


def admissible_direction(alpha: float, alpha_prime: float, theta: float) -> float:
    """A ray angle phi with |phi| < (alpha-1)pi/(2(alpha'-1)) and
    |theta - (alpha'-1) phi| < pi/2.  Picks the middle of the feasible interval."""
    a = alpha_prime - 1
    c = (alpha - 1) * math.pi / (2 * a)
    lo = max(-c, (theta - math.pi / 2) / a)
    hi = min(c, (theta + math.pi / 2) / a)
    if not lo < hi:
        raise AdmissibilityFailed(f"no admissible ray for theta={theta}")
    phi = 0.5 * (lo + hi)
    if not (abs(phi) < c and abs(theta - a * phi) < math.pi / 2):
        raise AdmissibilityFailed(f"ray {phi} not admissible for theta={theta}")
    return phi


def _simpson_adaptive(f: Callable[[float], complex], a: float, b: float,
                      tol: float, max_depth: int = 50) -> tuple[complex, float]:
    """Adaptive Simpson with Richardson correction; returns (value, error)."""
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total, err = 0j, 0.0
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = f(0.5 * (a + m)), f(0.5 * (m + b))
        left = (m - a) / 6 * (fa + 4 * lm + fm)
        right = (b - m) / 6 * (fm + 4 * rm + fb)
        delta = left + right - whole
        if abs(delta) <= 15 * tol or depth >= max_depth:
            total += left + right + delta / 15
            err += abs(delta) / 15
        else:
            stack.append((a, m, fa, lm, fm, left, tol / 2, depth + 1))
            stack.append((m, b, fm, rm, fb, right, tol / 2, depth + 1))
    return total, err


def g_alpha_eval(alpha: float, alpha_prime: float, z, n: int = 0,
                 tol: float = QUAD_TOL, full_output: bool = False):
    """n-th derivative of g_{alpha,alpha'} at z in S_alpha, by quadrature
    along the ray v = r e^{-i phi}."""
    _check_g_params(alpha, alpha_prime)
    if not 0 <= n <= G_MAX_ORDER:
        raise InvalidSpec(f"derivative order must be in [0, {G_MAX_ORDER}]")
    p = _as_point(z)
    if p.r > 0 and not p.in_sector(alpha):
        raise OutsideSector(f"arg {p.theta:.4g} outside S_{alpha}")
    a = alpha_prime - 1
    phi = admissible_direction(alpha, alpha_prime, p.theta) if p.r > 0 else 0.0
    zc = p.z
    rot = complex(math.cos(phi), -math.sin(phi))
    cphi = math.cos(phi)

    def integrand(r: float) -> complex:
        if r == 0.0:
            return rot if n == 0 else 0j
        va = (r ** a) * complex(math.cos(a * phi), -math.sin(a * phi))
        return ((-va) ** n) * np.exp(-zc * va - r * rot) * rot

    # |integrand| <= r^{an} e^{-r cos phi}; its integral is Gamma(k+1)/c^{k+1}
    k = a * n
    log_mass = gammaln(k + 1) - (k + 1) * math.log(cphi)
    scale = math.exp(min(gammaln(k + 1), 700.0))
    R = max(8.0, 2 * (k + 1) / cphi)
    while gammaincc(k + 1, R * cphi) * math.exp(log_mass) > TAIL_TOL * scale:
        R *= 1.5
    pieces = np.linspace(0.0, R, 33)
    pieces = np.unique(np.concatenate([pieces, np.geomspace(1e-8, 1.0, 9)]))
    val, err = 0j, 0.0
    abs_tol = tol * scale
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        v, e = _simpson_adaptive(integrand, float(lo), float(hi),
                                 abs_tol * (hi - lo) / R)
        val += v
        err += e
    err += TAIL_TOL * scale
    return (val, err, phi) if full_output else val


# ---------------------------------------------------- characteristic transform

def _log_quotients_to(M: WeightSequence, need: int) -> np.ndarray:
    """log m_n for n = 0..need, extending closed forms when necessary."""
    if M.N < need + 1:
        if M.generator is None:
            raise TruncationInsufficient(
                f"needs {need + 1} quotients, {M.label} only has {M.N}")
        M = extend(M, need + 1)
    return quotients(M)[: need + 1], M.logM[: need + 1]


def log_r_coefficients(M: WeightSequence, j_max: int, eps: float = R_EPS) -> np.ndarray:
    """log R_j, j = 0..j_max, for R_j = sum_n 2^{-n} M_n m_n^{j-n}."""
    if not is_log_convex(M.logM, 0.0):
        raise InvalidSpec(f"{M.label} must be log-convex")
    extra = int(math.ceil(math.log2(1.0 / eps)))
    J = j_max + extra
    lq, lM = _log_quotients_to(M, J)
    n = np.arange(J + 1)
    out = np.empty(j_max + 1)
    for j in range(j_max + 1):
        lt = -n * math.log(2.0) + lM + (j - n) * lq
        lt = np.sort(lt)[::-1]
        out[j] = lt[0] + math.log(np.sum(np.exp(lt - lt[0])))
    return out


def r_coefficients(M: WeightSequence, j_max: int, eps: float = R_EPS) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(log_r_coefficients(M, j_max, eps))


def transform_jet(f: Jet, M: WeightSequence, eps: float = R_EPS) -> Jet:
    """Jet of T_M(f): the j-th derivative is multiplied by R_j."""
    lr = log_r_coefficients(M, f.N, eps)
    return Jet(f.log_abs + lr, f.phase, f"Transformed({f.source},{M.label})")


@dataclass(frozen=True)
class Evaluable:
    """A function handle with the radius inside which it is trusted and a
    bound B >= sup |f| on the sector of interest."""

    fn: Callable[[complex], complex]
    radius: float
    bound: float
    label: str = "f"


def e_alpha_function(alpha: float, radius: float = ML_RADIUS) -> Evaluable:
    return Evaluable(lambda z: e_alpha_derivative(alpha, 0, z, radius), radius, 2.0,
                     f"E~_{alpha:g}")


def constant_function(c: complex) -> Evaluable:
    return Evaluable(lambda z: complex(c), math.inf, abs(c), f"const({c})")


def transform_eval(f: Evaluable, M: WeightSequence, z, eps: float = R_EPS,
                   full_output: bool = False):
    """T_M(f)(z) = sum_j 2^{-j} (M_j / m_j^j) f(m_j z), truncated with tail <= eps."""
    if not is_log_convex(M.logM, 0.0):
        raise InvalidSpec(f"{M.label} must be log-convex")
    zc = _as_point(z).z
    J = max(1, int(math.ceil(math.log2(max(f.bound, 1e-300) / eps))))
    lq, lM = _log_quotients_to(M, J)
    total = 0j
    for j in range(J + 1):
        arg = math.exp(lq[j]) * zc
        if abs(arg) > f.radius:
            raise ReliabilityExceeded(
                f"term j={j}: |m_j z| = {abs(arg):.4g} beyond radius {f.radius}")
        w = math.exp(-j * math.log(2.0) + lM[j] - j * lq[j])
        total += w * f.fn(arg)
    # M_j <= m_j^j for log-convex M with M_0 = 1, so each dropped term is <= B 2^{-j}
    tail = f.bound * 2.0 ** (-J)
    return (total, tail, J) if full_output else total


def jet_taylor(f: Jet, z: complex, terms: int | None = None) -> complex:
    """Taylor partial sum of the jet at z."""
    n = f.N if terms is None else min(terms, f.N)
    zc = complex(z)
    j = np.arange(n + 1)
    if zc == 0:
        return complex(f.derivs[0])
    lt = f.log_abs[: n + 1] - gammaln(j + 1) + j * np.log(zc)
    return complex(np.sum(f.phase[: n + 1] * np.exp(lt)))


# -------------------------------------------------- characteristic criteria

def check_characteristic_criteria(f: Jet, L: WeightSequence, bounds=None,
                                  th: Thresholds | None = None) -> dict:
    """Condition (1): (|f^(j)(0)|) equivalent to L; condition (2) when sup
    bounds C_j are supplied.  Only the downward implications are reported."""
    la = np.array(f.log_abs, dtype=float)
    notes = []
    zeros = np.flatnonzero(la == -np.inf)
    if zeros.size:
        notes.append(f"ZeroDerivative at j={zeros.tolist()}; indices skipped")
        la[zeros] = np.nan
    # compare works with M_0-normalized sequences
    c1 = compare_logs(la - (la[0] if np.isfinite(la[0]) else 0.0), L.logM, th)
    out = {"condition_1": c1.verdict.value, "comparison_1": c1.to_dict()}
    if bounds is not None:
        lb = np.log(np.asarray(bounds, dtype=float))
        c2 = compare_logs(lb - lb[0], L.logM, th)
        out["condition_2"] = c2.verdict.value
        out["comparison_2"] = c2.to_dict()
    implied = []
    if c1.verdict is Verdict.WITNESSED:
        implied = ["(2) implied by (1)", "(3) implied by (2)"]
    elif bounds is not None and out["condition_2"] == Verdict.WITNESSED.value:
        implied = ["(3) implied by (2)"]
    out["implied"] = implied
    out["notes"] = notes
    return _jsonable(out)


# ------------------------------------------------------------- composition

def partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    """Integer partitions of n as non-increasing tuples."""
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest


def _multiplicities(part: tuple[int, ...], n: int) -> list[int]:
    k = [0] * (n + 1)
    for p in part:
        k[p] += 1
    return k


def faa_di_bruno_compose(g: Jet, f: Jet, n_max: int | None = None) -> Jet:
    """Jet of g∘f at 0, where g's jet is taken at f(0)."""
    n_max = min(g.N, f.N) if n_max is None else n_max
    if n_max > FDB_MAX_ORDER:
        raise InvalidSpec(f"composition order capped at {FDB_MAX_ORDER}")
    if n_max > min(g.N, f.N):
        raise InvalidSpec("jets are too short for the requested order")
    gd = g.derivs
    fd = f.derivs
    out = [complex(gd[0])]
    for n in range(1, n_max + 1):
        acc = 0j
        for part in partitions(n):
            k = _multiplicities(part, n)
            coef = math.lgamma(n + 1)
            prod = complex(gd[len(part)])
            for i in range(1, n + 1):
                if k[i]:
                    coef -= math.lgamma(k[i] + 1)
                    prod *= (fd[i] / math.factorial(i)) ** k[i]
            acc += math.exp(coef) * prod
        out.append(acc)
    return Jet.from_values(out, f"Composition({g.source},{f.source})")


def multinomial_mass(n: int) -> int:
    """Sum of k!/(k_1!...k_n!) over all (k_i) with sum i k_i = n."""
    total = 0
    for part in partitions(n):
        k = _multiplicities(part, n)
        term = math.factorial(len(part))
        for ki in k[1:]:
            term //= math.factorial(ki)
        total += term
    return total


# -------------------------------------------------------------- membership

def membership_certificate(f, M: WeightSequence, h_grid=None, cap: float = 1e6,
                           th: Thresholds | None = None) -> MembershipCertificate:
    """Smallest grid h with sup_j |f^(j)| / (h^j M_j) <= cap.

    A Jet yields JetOnly evidence (necessary condition only); an array of
    sampled sup bounds C_j yields SampledSup evidence."""
    if isinstance(f, Jet):
        la, basis = np.array(f.log_abs), "JetOnly"
    else:
        with np.errstate(divide="ignore"):
            la, basis = np.log(np.asarray(f, dtype=float)), "SampledSup"
    if h_grid is None:
        h_grid = 2.0 ** (np.arange(-40, 81) / 4.0)
    h_grid = np.sort(np.asarray(h_grid, dtype=float))
    n = min(la.size, M.logM.size) - 1
    la = la[: n + 1]
    notes = ["JetOnly: |f^(j)(0)| <= C_j(f), so this is necessary-condition evidence"
             ] if basis == "JetOnly" else ["sampled sups under-estimate true sups"]
    if np.all(la == -np.inf):
        return MembershipCertificate(M, float(h_grid[0]), 0.0, basis,
                                     Verdict.WITNESSED, tuple(notes))
    fin = la[np.isfinite(la)]
    # growth test: (|f^(j)| / M_j)^{1/j} must stay bounded along the truncations
    shift = la[0] if np.isfinite(la[0]) else 0.0
    rep = compare_logs(np.where(np.isfinite(la), la - shift, np.nan),
                       M.logM[: n + 1], th).forward
    if rep.fails:
        raise NoFiniteH(f"(|f^(j)|/M_j)^(1/j) grows along truncations; "
                        f"no h works for {M.label}")
    j = np.arange(n + 1)
    mask = np.isfinite(la)
    for h in h_grid:
        lnorm = float(np.max(la[mask] - j[mask] * math.log(h) - M.logM[: n + 1][mask]))
        if lnorm <= math.log(cap):
            if rep.verdict is not Verdict.WITNESSED:
                notes.append("growth trace undetermined at this truncation")
            return MembershipCertificate(M, float(h), math.exp(lnorm), basis,
                                         rep.verdict, tuple(notes))
    raise NoFiniteH(f"no grid h <= {h_grid[-1]:.4g} keeps the norm below {cap:g}")


# ------------------------------------------------------ Gorny-Cartan check

def gorny_cartan_constants(alpha: float) -> tuple[float, float]:
    _check_alpha_narrow(alpha)
    if alpha == 1:
        return 4.0, 1.0
    return 8 * math.pi, 2 * math.e * (2 - alpha) / (1 - alpha)


def gorny_cartan_diagnostic(C, alpha: float, triples=None) -> dict:
    """Margins log(RHS) - log(LHS) of the interpolation inequality for
    B_n = n^{(1-alpha)n} C_n.  Diagnostic only: sampled sups are heuristic."""
    A, q = gorny_cartan_constants(alpha)
    c = np.asarray(C, dtype=float)
    with np.errstate(divide="ignore"):
        lc = np.log(c)
    n_all = np.arange(c.size)
    lB = lc + (1 - alpha) * np.where(n_all > 0, n_all * np.log(np.maximum(n_all, 1)), 0.0)
    if triples is None:
        triples = [(n - 1, n, n + 1) for n in range(1, c.size - 1)]
    rows, skipped = [], []
    for n1, n, n2 in triples:
        if not (0 <= n1 < n < n2 < c.size):
            raise InvalidSpec(f"bad triple {(n1, n, n2)}")
        if min(c[n1], c[n], c[n2]) <= 0:
            skipped.append((n1, n, n2))
            continue
        rhs = (math.log(A) + (1 - alpha) * n * math.log(q)
               + (n2 - n) / (n2 - n1) * lB[n1] + (n - n1) / (n2 - n1) * lB[n2])
        rows.append({"triple": [n1, n, n2], "log_lhs": float(lB[n]), "log_rhs": rhs,
                     "margin": rhs - float(lB[n])})
    return _jsonable({"kind": "diagnostic", "alpha": alpha, "A": A, "q": q,
                      "rows": rows, "skipped": skipped,
                      "note": "sampled sups under-estimate both sides; not a certificate"})
