"""Command-line front end.

Exit codes: 0 success, 2 Inconclusive classification, 1 computation error,
64 usage error, 65 malformed input data.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import analytic, indices, matrices, sequences, stability, weights
from .errors import WeightCalcError, InvalidSpec
from .reports import Thresholds, _jsonable

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 64, 65


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    N: int = 64
    t_max: float | None = None
    z_reliable: float = analytic.ML_RADIUS
    gamma_max: float = indices.GAMMA_MAX
    tau_stab: float = 0.05
    tau_grow: float = 0.25
    tau_margin: float = indices.TAU_MARGIN
    eps: float = analytic.R_EPS
    ell_grid: tuple = weights.DEFAULT_ELL_GRID
    output: str = "json"
    threads: int = 1

    def __post_init__(self):
        for name in ("z_reliable", "gamma_max", "tau_stab", "tau_grow", "tau_margin", "eps"):
            if not getattr(self, name) > 0:
                raise UsageError(f"config {name} must be positive")
        if self.t_max is not None and not self.t_max > 1:
            raise UsageError("config t_max must exceed 1")
        if not sequences.MIN_N <= self.N <= sequences.MAX_N:
            raise UsageError(f"config N must lie in [{sequences.MIN_N}, {sequences.MAX_N}]")
        if self.output not in ("json", "csv", "text"):
            raise UsageError("config output must be json, csv or text")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.tau_stab, self.tau_grow)

    def snapshot(self) -> dict:
        return _jsonable(asdict(self))


def parse_config_text(text: str) -> dict:
    """key = value lines; '#' starts a comment; values parsed as JSON when possible."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = _parse_value(val)
    return out


def _parse_value(val: str):
    try:
        return json.loads(val)
    except json.JSONDecodeError:
        return val.strip("\"'")


def build_config(path: str | None, overrides: list[str]) -> RunConfig:
    values: dict = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    for item in overrides or ():
        values.update(parse_config_text(item))
    env = os.environ.get("WEIGHTCALC_THREADS")
    if env:
        try:
            values["threads"] = int(env)
        except ValueError as exc:
            raise UsageError("WEIGHTCALC_THREADS must be an integer") from exc
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "ell_grid" in values:
        values["ell_grid"] = tuple(float(x) for x in values["ell_grid"])
    if "N" in values:
        values["N"] = int(values["N"])
    return RunConfig(**values)


# -------------------------------------------------------------- spec input

_SHORT_PARAM = {"gevrey": "a", "gevrey_bar": "a", "qgevrey": "q"}
_OMEGA_PARAM = {"log_square": "q", "power": "p", "linear_log": None}


def load_spec(text: str) -> dict:
    """A JSON file path, an inline JSON object, or shorthand like 'gevrey:2'."""
    if text.lstrip().startswith("{"):
        return _json(text)
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            return _json(fh.read())
    parts = text.split(":")
    kind = parts[0]
    if kind in _SHORT_PARAM and len(parts) in (2, 3):
        spec = {"kind": kind, _SHORT_PARAM[kind]: _number(parts[1])}
        if len(parts) == 3:
            spec["N"] = int(_number(parts[2]))
        return spec
    if kind in _OMEGA_PARAM and len(parts) <= 2:
        spec = {"kind": "closed_form", "tag": kind}
        if len(parts) == 2 and _OMEGA_PARAM[kind]:
            spec[_OMEGA_PARAM[kind]] = _number(parts[1])
        return spec
    raise DataError(f"cannot interpret spec {text!r}")


def _number(s: str) -> float:
    if s == "e":
        return math.e
    try:
        return float(s)
    except ValueError as exc:
        raise DataError(f"bad number {s!r}") from exc


def _json(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DataError("spec must be a JSON object")
    return obj


def _build(maker, spec: dict, cfg: RunConfig, key: str = "N"):
    spec = dict(spec)
    spec.setdefault(key, cfg.N)
    try:
        return maker(spec)
    except (KeyError, TypeError) as exc:
        raise DataError(f"incomplete spec: missing or bad field {exc}") from exc


def _sequence(text, cfg):
    spec = load_spec(text)
    if spec.get("kind") in ("table",):
        spec.pop("N", None)
        try:
            return sequences.make_sequence(spec)
        except (KeyError, TypeError) as exc:
            raise DataError(f"incomplete spec: {exc}") from exc
    return _build(sequences.make_sequence, spec, cfg)


def _omega(text, cfg):
    spec = load_spec(text)
    if spec.get("kind") == "closed_form" and cfg.t_max is not None:
        spec.setdefault("t_max", cfg.t_max)
    try:
        return weights.make_weight_function(spec)
    except (KeyError, TypeError) as exc:
        raise DataError(f"incomplete spec: {exc}") from exc


def _matrix(text, cfg):
    spec = load_spec(text)
    if spec.get("kind") == "from_omega":
        spec.setdefault("grid", list(cfg.ell_grid))
    return _build(matrices.make_matrix, spec, cfg)


# ------------------------------------------------------------- commands

def cmd_seq(args, cfg):
    s = _sequence(args.spec, cfg)
    th = cfg.thresholds
    if args.action == "check":
        conds = args.cond or list(sequences.CONDITIONS)
        return {"sequence": s.label, "N": s.N,
                "reports": {c: sequences.check_condition(s, c, th).to_dict() for c in conds}}
    if args.action == "compare":
        if not args.other:
            raise UsageError("seq compare needs --other")
        t = _sequence(args.other, cfg)
        return {"sequence": s.label, "other": t.label,
                "comparison": sequences.compare(s, t, th).to_dict()}
    lc = weights.log_convex_minorant(s)
    return {"sequence": s.label, "minorant_logM": lc.logM}


def cmd_omega(args, cfg):
    w = _omega(args.spec, cfg)
    th = cfg.thresholds
    if args.action == "check":
        reps = weights.check_omega_conditions(w, th)
        conds = args.cond or sorted(reps)
        return {"omega": w.label, "reports": {c: reps[c].to_dict() for c in conds}}
    if args.action == "conjugate":
        if args.x is None:
            raise UsageError("omega conjugate needs --x")
        return {"omega": w.label, "x": args.x, "conjugate": weights.legendre_conjugate(w, args.x)}
    s = weights.recover_sequence(w, args.n or cfg.N)
    return {"omega": w.label, "logM": s.logM}


def cmd_index(args, cfg):
    if args.which == "gamma-m":
        est = indices.gamma_sequence(_sequence(args.spec, cfg), cfg.gamma_max, th=cfg.thresholds)
    else:
        est = indices.gamma_omega(_omega(args.spec, cfg), tau_margin=cfg.tau_margin,
                                  gamma_max=cfg.gamma_max)
    return {"index": est.to_dict()}


def cmd_matrix(args, cfg):
    m = _matrix(args.spec, cfg)
    th = cfg.thresholds
    if args.action == "m-alpha":
        if args.alpha is None:
            raise UsageError("matrix m-alpha needs --alpha")
        ma = matrices.build_m_alpha(m, args.alpha, th)
        return {"matrix": ma.to_dict()}
    conds = args.cond or list(matrices.MATRIX_CONDITIONS)
    return {"matrix": m.to_dict(),
            "reports": {c: matrices.check_matrix_condition(m, c, th).to_dict() for c in conds}}


def _parse_complex(text: str) -> complex:
    try:
        if "," in text:
            re_, im_ = text.split(",", 1)
            return complex(float(re_), float(im_))
        return complex(text.replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"bad complex number {text!r}") from exc


def cmd_char(args, cfg):
    n = args.n if args.n is not None else cfg.N
    if args.action == "jet":
        if args.alpha > 1:
            if args.alpha_prime is None:
                raise UsageError("alpha > 1 needs --alpha-prime")
            jet = analytic.g_alpha_jet(args.alpha, args.alpha_prime, n)
        else:
            jet = analytic.e_alpha_jet(args.alpha, n)
        return {"jet": jet.to_dict()}
    if args.action == "transform":
        if not args.spec:
            raise UsageError("char transform needs --spec")
        L = _sequence(args.spec, cfg)
        jet = analytic.transform_jet(analytic.e_alpha_jet(args.alpha, n), L, cfg.eps)
        return {"jet": jet.to_dict(), "log_R": analytic.log_r_coefficients(L, n, cfg.eps)}
    if args.action == "eval":
        if args.z is None:
            raise UsageError("char eval needs --z")
        z = _parse_complex(args.z)
        order = args.order or 0
        if args.alpha > 1:
            if args.alpha_prime is None:
                raise UsageError("alpha > 1 needs --alpha-prime")
            v, err, phi = analytic.g_alpha_eval(args.alpha, args.alpha_prime, z, order,
                                                full_output=True)
            return {"value": v, "error": err, "phi": phi}
        v, err = analytic.e_alpha_derivative(args.alpha, order, z, cfg.z_reliable, True)
        return {"value": v, "error": err}
    rep = analytic.e_alpha_bound_check(args.alpha, args.n_max, radius=cfg.z_reliable)
    return {"bound_check": rep}


def cmd_classify(args, cfg):
    th = cfg.thresholds
    if args.omega:
        v = stability.classify_omega(_omega(args.omega, cfg), args.alpha, th)
    elif args.matrix:
        v = stability.classify(_matrix(args.matrix, cfg), args.alpha, th)
    elif args.spec:
        v = stability.classify(matrices.constant_matrix(_sequence(args.spec, cfg)), args.alpha, th)
    else:
        raise UsageError("classify needs --matrix, --omega or --spec")
    return {"classification": v.to_dict()}


def parse_range(text: str) -> list[float]:
    """'start:stop:step' inclusive of stop, or a comma list."""
    try:
        if ":" in text:
            a, b, s = (float(x) for x in text.split(":"))
            if s <= 0:
                raise ValueError
            count = int(math.floor((b - a) / s + 1e-9)) + 1
            return [round(a + k * s, 12) for k in range(count)]
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}") from exc


CSV_COLUMNS = ("alpha", "beta", "verdict", "justification")


def _csv(cells) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for c in cells:
        wr.writerow([repr(c["alpha"]), repr(c["beta"]), c["verdict"], c["justification"]])
    return buf.getvalue()


def _map_cells(alpha, beta, cfg, pipeline=True):
    cells = stability.gevrey_map(alpha, beta, th=cfg.thresholds, pipeline=pipeline)
    return sorted(cells, key=lambda c: (c["alpha"], c["beta"]))


def _map_summary(cells) -> dict:
    counts: dict = {}
    for c in cells:
        counts[c["verdict"]] = counts.get(c["verdict"], 0) + 1
    piped = [c for c in cells if "pipeline" in c]
    return {"cells": len(cells), "regions": counts,
            "pipeline_disagreements": sum(1 for c in piped if not c["agree"]),
            "pipeline_inconclusive": sum(1 for c in piped if c["pipeline"] == "Inconclusive")}


def cmd_map(args, cfg):
    if args.family != "gevrey":
        raise UsageError("only the gevrey map is available")
    cells = _map_cells(parse_range(args.alpha), parse_range(args.beta), cfg, not args.no_pipeline)
    fmt = args.out or cfg.output
    if fmt == "csv":
        return _csv(cells)
    return {"summary": _map_summary(cells), "cells": cells}


def cmd_demo_qgevrey(args, cfg):
    q = args.q
    th = cfg.thresholds
    w = weights.closed_form("log_square", q=q)
    m = weights.matrix_from_omega(w, cfg.ell_grid, cfg.N, th)
    j = np.arange(m.N + 1)
    errs = {}
    for ell, row in zip(m.params, m.rows):
        exact = ell * j.astype(float) ** 2 * math.log(q)
        errs[ell] = float(np.max(np.abs(row.logM - exact) / np.maximum(1.0, np.abs(exact))))
    gamma = indices.gamma_sequence(sequences.qgevrey(q, cfg.N), cfg.gamma_max, th=th)
    verdicts = {}
    for a in (0.5, 1.0, 2.0, 3.0):
        verdicts[a] = {"omega": stability.classify_omega(w, a, th).verdict.value,
                       "constant_qgevrey": stability.classify(
                           matrices.constant_matrix(sequences.qgevrey(q, cfg.N)), a, th
                       ).verdict.value}
    ok = (max(errs.values()) <= 1e-6 and gamma.is_infinite
          and all(v["omega"] == "StableComposition" for v in verdicts.values()))
    return {"q": q, "matrix_rows_log_relative_error": errs, "gamma_qgevrey": gamma.to_dict(),
            "stability": verdicts, "matches_expected": ok}


def cmd_demo_figure(args, cfg):
    alpha = parse_range(args.alpha)
    beta = parse_range(args.beta)
    cells = _map_cells(alpha, beta, cfg)
    if (args.out or cfg.output) == "csv":
        return _csv(cells)
    return {"summary": _map_summary(cells)}


# -------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="weightcalc", description="Weight sequences, weight functions, "
                "weight matrices and stability of ultraholomorphic classes.")
    p.add_argument("--config", help="key = value file overriding run defaults")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config value")
    p.add_argument("--output", "-o", help="write the artifact to this file")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("seq", help="sequence conditions and comparisons")
    s.add_argument("action", choices=("check", "compare", "minorant"))
    s.add_argument("--spec", required=True)
    s.add_argument("--cond", action="append", choices=sequences.CONDITIONS)
    s.add_argument("--other")

    o = sub.add_parser("omega", help="weight function conditions")
    o.add_argument("action", choices=("check", "conjugate", "recover"))
    o.add_argument("--spec", required=True)
    o.add_argument("--cond", action="append")
    o.add_argument("--x", type=float)
    o.add_argument("--n", type=int)

    i = sub.add_parser("index", help="growth index estimates")
    i.add_argument("which", choices=("gamma-m", "gamma-omega"))
    i.add_argument("spec")

    m = sub.add_parser("matrix", help="weight matrix conditions")
    m.add_argument("action", choices=("check", "m-alpha"))
    m.add_argument("--spec", required=True)
    m.add_argument("--cond", action="append", choices=matrices.MATRIX_CONDITIONS)
    m.add_argument("--alpha", type=float)

    c = sub.add_parser("char", help="characteristic functions and jets")
    c.add_argument("action", choices=("jet", "transform", "eval", "bound-check"))
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--alpha-prime", type=float)
    c.add_argument("--n", type=int)
    c.add_argument("--n-max", type=int, default=8)
    c.add_argument("--order", type=int)
    c.add_argument("--z")
    c.add_argument("--spec")

    k = sub.add_parser("classify", help="stability verdict")
    k.add_argument("--matrix")
    k.add_argument("--omega")
    k.add_argument("--spec", help="sequence; classified as a constant matrix")
    k.add_argument("--alpha", type=float, required=True)

    mp = sub.add_parser("map", help="stability map over a parameter grid")
    mp.add_argument("family", choices=("gevrey",))
    mp.add_argument("--alpha", default="0.05:3.5:0.05")
    mp.add_argument("--beta", default="-2:3:0.05")
    mp.add_argument("--out", choices=("json", "csv"))
    mp.add_argument("--no-pipeline", action="store_true")

    dq = sub.add_parser("demo-qgevrey", help="q-Gevrey worked example")
    dq.add_argument("--q", type=_number, default=1.5)

    dg = sub.add_parser("demo-gevrey-figure", help="Gevrey stability regions")
    dg.add_argument("--alpha", default="0.05:3.5:0.05")
    dg.add_argument("--beta", default="-2:3:0.05")
    dg.add_argument("--out", choices=("json", "csv"))

    # -o is also accepted after the subcommand; SUPPRESS keeps the global value otherwise
    for sp in (s, o, i, m, c, k, mp, dq, dg):
        sp.add_argument("--output", "-o", default=argparse.SUPPRESS,
                        help="write the artifact to this file")
    return p


COMMANDS = {"seq": cmd_seq, "omega": cmd_omega, "index": cmd_index, "matrix": cmd_matrix,
            "char": cmd_char, "classify": cmd_classify, "map": cmd_map,
            "demo-qgevrey": cmd_demo_qgevrey, "demo-gevrey-figure": cmd_demo_figure}


def render(result, cfg: RunConfig) -> str:
    if isinstance(result, str):
        return result
    payload = {"config": cfg.snapshot(), **_jsonable(result)}
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _glue_negative_values(argv: list[str]) -> list[str]:
    """argparse reads '-1:1:0.5' as an option; attach such values to their flag."""
    out: list[str] = []
    for tok in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1]
                and len(tok) > 1 and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser().parse_args(argv)
        cfg = build_config(args.config, args.set)
        result = COMMANDS[args.command](args, cfg)
        text = render(result, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except (DataError, InvalidSpec) as exc:
        print(f"bad input: {exc}", file=stderr)
        return EXIT_DATA
    except WeightCalcError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_ERROR
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if args.command == "classify" and result["classification"]["verdict"] == "Inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
