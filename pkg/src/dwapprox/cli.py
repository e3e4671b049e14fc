"""Command-line entry point: ``dwapprox <subcommand> [options]``.

Parameters come from an optional JSON config (``--config``) and are
overridden by explicit flags. Check subcommands write an ExperimentReport
as CSV or JSON to ``--out`` (a directory) or to stdout.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .approx import best_approx, wn_evaluator
from .moduli import ModulusQuery, averaged_modulus, weighted_modulus
from .poly_core import ParameterError
from .weights import (
    builtin_weights,
    check_a_star,
    class_membership,
    estimate_doubling_constant,
    estimate_growth_exponents,
    sweep_grid,
    weight_from_spec,
)

DEFAULTS = {
    "weight": {"kind": "constant", "params": {}},
    "function": "abs",
    "r": 2,
    "p": 2.0,
    "n_list": [8, 16, 32, 64],
    "n": 32,
    "m": 8,
    "t": 0.05,
    "delta": 1.0,
    "gamma": 1.0,
    "trials": 50,
    "theta": 0.5,
    "A": 0.5,
    "B": 1.0,
    "alpha_hint": None,
    "nu0": 2,
    "grid_size": 1024,
    "seed": 0,
    "x": None,
}


def _parse_p(text):
    if str(text).lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _weight_arg(text):
    """A builtin weight name or an inline JSON weight spec."""
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    return {"kind": "builtin", "params": {"name": text}}


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def _float_list(text):
    return [float(v) for v in text.split(",") if v]


def _settings(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            cfg.update(json.load(fh))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg["p"] = _parse_p(cfg["p"])
    return cfg


def _function(name):
    funcs = harness.corpus()
    if name not in funcs:
        raise ParameterError(f"unknown function {name!r}; choose from {sorted(funcs)}")
    return funcs[name]


def _emit_report(rep: harness.ExperimentReport, args) -> None:
    text = rep.to_csv() if args.format == "csv" else rep.to_json()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{rep.check_id}.{args.format}"
        with open(path, "w", newline="") as fh:
            fh.write(text)
        print(f"{rep.summary()} -> {path}", file=sys.stderr)
    else:
        sys.stdout.write(text)
        print(rep.summary(), file=sys.stderr)


def _emit_table(name: str, header, rows, meta, args) -> None:
    if args.format == "json":
        doc = {"table": name, "metadata": meta, "rows": [dict(zip(header, r)) for r in rows]}
        text = json.dumps(harness._jsonable(doc), indent=2, sort_keys=True) + "\n"
    else:
        lines = [",".join(header)]
        lines += [",".join(harness._fmt(v) if not isinstance(v, str) else v for v in r) for r in rows]
        text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{name}.{args.format}", "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_weight_report(cfg, args):
    w = weight_from_spec(cfg["weight"])
    n_list = cfg["n_list"]
    K, s = estimate_growth_exponents(w, n_list)
    rows = [("growth_K", K), ("growth_s", s), ("doubling_lower_bound", estimate_doubling_constant(w, 8))]
    try:
        rows.append(("a_star", check_a_star(w)))
    except ValueError:
        rows.append(("a_star", math.inf))
    pairs = [(1.0, 1.0), (2.0, 0.0), (1.5, 0.5)]
    if (float(cfg["delta"]), float(cfg["gamma"])) not in pairs:
        pairs.append((float(cfg["delta"]), float(cfg["gamma"])))
    for d, g in pairs:
        rep = class_membership(w, d, g, n_list)
        rows.append((f"class_lambda({d:g},{g:g})", rep.lambda_est))
    _emit_table("weight_report", ["quantity", "value"], rows, {"weight": w.label, "n_list": n_list}, args)


def cmd_wn_eval(cfg, args):
    w = weight_from_spec(cfg["weight"])
    n = int(cfg["n"])
    x = np.asarray(cfg["x"], dtype=float) if cfg["x"] is not None else sweep_grid([n], w, int(cfg["grid_size"]))
    vals = wn_evaluator(w, n)(x)
    _emit_table("wn_eval", ["x", "w_n"], list(zip(x, vals)), {"weight": w.label, "n": n}, args)


def cmd_modulus(cfg, args):
    f = _function(cfg["function"])
    w = weight_from_spec(cfg["weight"])
    ev = wn_evaluator(w, int(cfg["n"]))
    q = ModulusQuery(f, int(cfg["r"]), float(cfg["t"]), cfg["p"], ev, singular_points=f.singular_points)
    rows = [("omega", weighted_modulus(q)), ("omega_averaged", averaged_modulus(q))]
    meta = {"function": f.name, "weight": w.label, "r": cfg["r"], "t": cfg["t"], "p": cfg["p"], "n": cfg["n"]}
    _emit_table("modulus", ["quantity", "value"], rows, meta, args)


def cmd_bestapprox(cfg, args):
    f = _function(cfg["function"])
    w = weight_from_spec(cfg["weight"])
    n = int(cfg["n"])
    res = best_approx(f, n, cfg["p"], wn_evaluator(w, n))
    rows = [(k, c) for k, c in enumerate(res.poly.coeffs)]
    meta = {"function": f.name, "weight": w.label, "n": n, "p": cfg["p"], "error": res.error,
            "certified": res.certified}
    print(f"E_{n} = {res.error:.17g} ({res.certified})", file=sys.stderr)
    _emit_table("bestapprox", ["k", "cheb_coeff"], rows, meta, args)


def cmd_jackson(cfg, args):
    w = weight_from_spec(cfg["weight"])
    return harness.check_jackson(_function(cfg["function"]), w, int(cfg["r"]), cfg["p"], cfg["n_list"],
                                 theta=float(cfg["theta"]))


def cmd_bernstein(cfg, args):
    w = weight_from_spec(cfg["weight"])
    return harness.check_bernstein(w, int(cfg["r"]), cfg["p"], cfg["n_list"], trials=int(cfg["trials"]),
                                   seed=int(cfg["seed"]))


def cmd_inverse(cfg, args):
    w = weight_from_spec(cfg["weight"])
    return harness.check_inverse(_function(cfg["function"]), w, float(cfg["delta"]), float(cfg["gamma"]),
                                 int(cfg["r"]), cfg["p"], cfg["n_list"])


def cmd_equivalence(cfg, args):
    w = weight_from_spec(cfg["weight"])
    return harness.check_equivalence(_function(cfg["function"]), w, int(cfg["r"]), cfg["p"], cfg["n_list"],
                                     A=float(cfg["A"]), B=float(cfg["B"]))


def cmd_qn(cfg, args):
    w = weight_from_spec(cfg["weight"])
    return harness.check_qn(w, cfg["p"], cfg["n_list"], nu0=int(cfg["nu0"]), grid_size=int(cfg["grid_size"]))


def cmd_class(cfg, args):
    w = weight_from_spec(cfg["weight"])
    return harness.check_class(w, float(cfg["delta"]), float(cfg["gamma"]), cfg["n_list"])


def cmd_rate(cfg, args):
    w = weight_from_spec(cfg["weight"])
    hint = cfg["alpha_hint"]
    return harness.check_rate_equivalence(_function(cfg["function"]), w, int(cfg["r"]), cfg["p"],
                                          None if hint is None else float(hint), cfg["n_list"])


COMMANDS = {
    "weight-report": (cmd_weight_report, "growth, doubling, A* and class diagnostics of a weight"),
    "wn-eval": (cmd_wn_eval, "evaluate w_n on a grid or at given points"),
    "modulus": (cmd_modulus, "weighted and averaged moduli of a corpus function"),
    "bestapprox": (cmd_bestapprox, "weighted best approximation of a corpus function"),
    "jackson-check": (cmd_jackson, "approximation error against the averaged modulus"),
    "bernstein-check": (cmd_bernstein, "weighted Bernstein ratios of random polynomials"),
    "inverse-check": (cmd_inverse, "modulus against the weighted sum of best-approximation errors"),
    "equivalence-check": (cmd_equivalence, "pairwise ratios of moduli, K-functional and realizations"),
    "qn-check": (cmd_qn, "polynomial envelope of w_n^{1/p}"),
    "class-check": (cmd_class, "class-inequality constant of a weight"),
    "rate-check": (cmd_rate, "decay rates of E_n and of the modulus"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dwapprox", description="Weighted polynomial approximation experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default parameters")
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, help="random seed (u64)")
    common.add_argument("--weight", type=_weight_arg, help="builtin weight name or JSON weight spec")
    common.add_argument("--function", help=f"corpus function: {', '.join(harness.corpus())}")
    common.add_argument("--r", type=int)
    common.add_argument("--p", help="exponent, 'inf' allowed")
    common.add_argument("--n", type=int)
    common.add_argument("--n-list", dest="n_list", type=_int_list, help="comma-separated degrees")
    common.add_argument("--t", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--trials", type=int)
    common.add_argument("--theta", type=float)
    common.add_argument("--A", type=float)
    common.add_argument("--B", type=float)
    common.add_argument("--alpha-hint", dest="alpha_hint", type=float)
    common.add_argument("--nu0", type=int)
    common.add_argument("--grid-size", dest="grid_size", type=int)
    common.add_argument("--x", type=_float_list, help="comma-separated evaluation points")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=helptext)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _settings(args)
        result = COMMANDS[args.command][0](cfg, args)
    except (ParameterError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, harness.ExperimentReport):
        _emit_report(result, args)
        return 0 if result.passed else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
