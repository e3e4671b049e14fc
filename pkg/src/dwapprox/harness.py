"""Experiment driver: sweeps that measure the constants in the weighted
Jackson, Bernstein, inverse and equivalence inequalities, plus rate fitting
and report serialization.

Every check returns an `ExperimentReport` whose verdict is recomputed from
its rows by `evaluate_verdict`, so a stored CSV/JSON report can be
re-judged without rerunning anything.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .approx import (
    NormRule,
    best_approx,
    default_mu,
    jackson_operator,
    k_functional,
    lambda_p,
    qn_weight_poly,
    realization,
    wn_evaluator,
)
from .moduli import ModulusQuery, averaged_modulus, difference_norms, weighted_modulus
from .poly_core import DEFAULT_CFG, ChebPoly, ParameterError, QuadratureConfig
from .weights import Weight, class_membership, delta_max, delta_n, phi, sweep_grid

__all__ = [
    "CorpusFunction",
    "corpus",
    "ReportRow",
    "ExperimentReport",
    "evaluate_verdict",
    "fit_rate",
    "random_polys",
    "check_bernstein",
    "check_bernstein_growth",
    "check_factorial_bernstein",
    "check_poly_modulus_bound",
    "check_difference_bracket",
    "check_jackson",
    "check_inverse",
    "check_equivalence",
    "check_rate_equivalence",
    "check_qn",
    "check_class",
    "class_passes",
]

CSV_HEADER = ["check_id", "n", "param_r", "param_p", "lhs", "rhs", "ratio", "witness"]


# ---------------------------------------------------------------------------
# Test-function corpus
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CorpusFunction:
    """A vectorized function with its nonsmooth points.

    Attributes:
        name: identifier used in reports.
        fn: the function.
        singular_points: points where fn is not smooth.
        poly_degree: degree when fn is a polynomial, else None.
    """

    name: str
    fn: Callable = field(repr=False)
    singular_points: tuple = ()
    poly_degree: int | None = None

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def _trunc_power(x):
    return np.maximum(x, 0.0) ** 2.5


_CORPUS = (
    CorpusFunction("abs", np.abs, (0.0,)),
    CorpusFunction("abs_pow_1_5", lambda x: np.abs(x) ** 1.5, (0.0,)),
    CorpusFunction("sqrt_abs_shift", lambda x: np.sqrt(np.abs(x - 0.3)), (0.3,)),
    CorpusFunction("x_abs_x", lambda x: x * np.abs(x), (0.0,)),
    CorpusFunction("sin_5x", lambda x: np.sin(5.0 * x)),
    CorpusFunction("trunc_pow_2_5", _trunc_power, (0.0,)),
)


def corpus() -> dict[str, CorpusFunction]:
    """The fixed test functions keyed by name."""
    return {f.name: f for f in _CORPUS}


def polynomial_function(coeffs: Sequence[float], name: str = "poly") -> CorpusFunction:
    """A CorpusFunction for a Chebyshev series."""
    P = ChebPoly(coeffs)
    return CorpusFunction(name, lambda x: P(x, check=False), (), P.degree)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReportRow:
    """One sweep cell; ratio is always lhs / rhs (nan when rhs is 0)."""

    n: int
    param_r: float
    param_p: float
    lhs: float
    rhs: float
    witness: str = ""

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else math.inf
        return self.lhs / self.rhs


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


@dataclass
class ExperimentReport:
    """Rows of one check with its verdict and run metadata.

    Attributes:
        check_id: name of the check.
        rows: sweep cells.
        verdict: "pass", "fail" or "degenerate-pass".
        metadata: parameters, the verdict rule and derived numbers.
    """

    check_id: str
    rows: list
    verdict: str = ""
    metadata: dict = field(default_factory=dict)

    def finalize(self) -> "ExperimentReport":
        self.verdict = evaluate_verdict(self)
        return self

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "degenerate-pass")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow([self.check_id, row.n, _fmt(row.param_r), _fmt(row.param_p), _fmt(row.lhs),
                             _fmt(row.rhs), _fmt(row.ratio), row.witness])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{**asdict(r), "ratio": r.ratio} for r in self.rows]
        doc = {"check_id": self.check_id, "verdict": self.verdict, "metadata": self.metadata, "rows": rows}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        doc = json.loads(text)
        rows = [ReportRow(r["n"], _num(r["param_r"]), _num(r["param_p"]), _num(r["lhs"]), _num(r["rhs"]),
                          r.get("witness", "")) for r in doc["rows"]]
        return cls(doc["check_id"], rows, doc["verdict"], doc["metadata"])

    def write(self, path, fmt: str = "csv") -> None:
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w", newline="") as fh:
            fh.write(text)

    def summary(self) -> str:
        ratios = [r.ratio for r in self.rows if math.isfinite(r.ratio)]
        span = f"ratio in [{min(ratios):.4g}, {max(ratios):.4g}]" if ratios else "no finite ratios"
        return f"{self.check_id}: {self.verdict} ({len(self.rows)} rows, {span})"


def _num(v):
    if isinstance(v, str):
        return float(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else _fmt(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# Verdict rules (pure functions of the rows and the stored rule)
# ---------------------------------------------------------------------------


def _slope(ns, vals):
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if ns.size < 2 or np.unique(ns).size < 2:
        return 0.0
    return float(np.polyfit(np.log(ns), np.log(vals), 1)[0])


def _rule_trend(rows, max_slope=0.1, max_spread=None):
    live = [r for r in rows if not (r.lhs == 0.0 and r.rhs == 0.0)]
    if not live:
        return "degenerate-pass"
    if any(not math.isfinite(r.ratio) or r.ratio <= 0 for r in live):
        return "fail"
    by_n = {}
    for r in live:
        by_n[r.n] = max(by_n.get(r.n, 0.0), r.ratio)
    ns = sorted(by_n)
    vals = [by_n[n] for n in ns]
    if _slope(ns, vals) > max_slope:
        return "fail"
    if max_spread is not None and max(vals) / min(vals) > max_spread:
        return "fail"
    return "pass"


def _rule_consecutive(rows, max_step=1.5, floor=0.0):
    # values at or below floor count as the floor, so rounding noise cannot fake growth
    by_n = {}
    for r in rows:
        by_n[r.n] = max(by_n.get(r.n, 0.0), r.ratio)
    if floor > 0:
        by_n = {n: max(v, floor) for n, v in by_n.items()}
    ns = sorted(by_n)
    vals = [by_n[n] for n in ns]
    if any(not math.isfinite(v) for v in vals):
        return "fail"
    if all(v == 0.0 for v in vals):
        return "degenerate-pass"
    for a, b in zip(vals, vals[1:]):
        if a > 0 and b / a > max_step:
            return "fail"
        if a == 0 and b > 0:
            return "fail"
    return "pass"


def _rule_bracket(rows, low, high):
    ok = all(low <= r.ratio <= high for r in rows)
    return "pass" if ok else "fail"


def _rule_max(rows, high):
    return "pass" if all(r.ratio <= high for r in rows) else "fail"


def _rule_rate(rows, meta):
    if meta.get("saturated"):
        return "degenerate-pass"
    if meta.get("super_algebraic"):
        return "pass"
    a_e, a_w = meta["alpha_E"], meta["alpha_omega"]
    if abs(a_e - a_w) > meta.get("tolerance", 0.1):
        return "fail"
    hint = meta.get("alpha_hint")
    if hint is not None and (abs(a_e - hint) > 0.15 or abs(a_w - hint) > 0.15):
        return "fail"
    return "pass"


def evaluate_verdict(report: ExperimentReport) -> str:
    """Apply the rule stored in ``report.metadata['rule']`` to the rows."""
    rule = report.metadata.get("rule", {"kind": "trend"})
    kind = rule["kind"]
    if kind == "trend":
        return _rule_trend(report.rows, rule.get("max_slope", 0.1), rule.get("max_spread"))
    if kind == "consecutive":
        return _rule_consecutive(report.rows, rule.get("max_step", 1.5), rule.get("floor", 0.0))
    if kind == "bracket":
        return _rule_bracket(report.rows, rule["low"], rule["high"])
    if kind == "max":
        return _rule_max(report.rows, rule["high"])
    if kind == "rate":
        return _rule_rate(report.rows, report.metadata)
    if kind == "all":
        verdicts = [evaluate_verdict(ExperimentReport(report.check_id, [r for r in report.rows if r.witness.startswith(tag)],
                                                      metadata={**report.metadata, "rule": sub}))
                    for tag, sub in rule["parts"]]
        if any(v == "fail" for v in verdicts):
            return "fail"
        return "pass"
    raise ParameterError(f"unknown verdict rule {kind!r}")


# ---------------------------------------------------------------------------
# Rate fitting
# ---------------------------------------------------------------------------


def fit_rate(seq) -> float:
    """alpha with value ~ n^-alpha, fitted after dropping the two smallest n.

    Args:
        seq: iterable of (n, value) pairs with at least 4 positive values.
    """
    pairs = sorted((int(n), float(v)) for n, v in seq)
    pos = [(n, v) for n, v in pairs if v > 0 and math.isfinite(v)]
    if len(pos) < len(pairs):
        warnings.warn(f"fit_rate: dropped {len(pairs) - len(pos)} nonpositive values", RuntimeWarning, stacklevel=2)
    if len(pos) < 4:
        raise ParameterError("fit_rate needs at least 4 positive entries")
    kept = pos[2:]
    return -_slope([n for n, _ in kept], [v for _, v in kept])


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def random_polys(n: int, trials: int, seed: int = 0) -> list:
    """``trials`` ChebPolys of degree n-1 with i.i.d. U[-1, 1] coefficients."""
    rng = np.random.default_rng([int(seed), int(n)])
    return [ChebPoly(rng.uniform(-1.0, 1.0, n)) for _ in range(trials)]


def _poly_rule(weight: Weight | None, n: int):
    ev = None if weight is None else wn_evaluator(weight, n)
    return NormRule.for_problem(None, ev, n=n, fine=True)


def _label(w):
    return "none" if w is None else w.label


def _meta(**kw):
    return {k: v for k, v in kw.items()}


def class_passes(weight: Weight, delta: float, gamma: float, n_list=(4, 8, 16, 32, 64)) -> tuple:
    """Class-inequality constant on n_list and on n_list extended by 2 max(n);
    membership is accepted when the constant grows by at most 1.5x."""
    n_list = list(n_list)
    a = class_membership(weight, delta, gamma, n_list)
    b = class_membership(weight, delta, gamma, n_list + [2 * max(n_list)])
    ok = math.isfinite(b.lambda_est) and b.lambda_est <= 1.5 * a.lambda_est
    return ok, a.lambda_est, b.lambda_est


# ---------------------------------------------------------------------------
# Markov-Bernstein checks
# ---------------------------------------------------------------------------


def check_bernstein(w: Weight | None, r: int, p: float, n_list, trials: int = 50, cfg: QuadratureConfig = DEFAULT_CFG,
                    seed: int = 0) -> ExperimentReport:
    """max over random P of ||delta_n^r P^{(r)}||_{p,w_n} / ||P||_{p,w_n} per n."""
    rows = []
    for n in n_list:
        rule = _poly_rule(w, n)
        x = rule.nodes
        dn = delta_n(n, x) ** r
        best = None
        for k, P in enumerate(random_polys(n, trials, seed)):
            lhs = rule.norm(dn * P.derivative(r)(x), p)
            rhs = rule.norm(P(x), p)
            if best is None or lhs / rhs > best[0] / best[1]:
                best = (lhs, rhs, k)
        rows.append(ReportRow(n, r, p, best[0], best[1], f"trial={best[2]}"))
    meta = _meta(weight=_label(w), r=r, p=p, trials=trials, seed=seed, rule={"kind": "consecutive", "max_step": 1.5})
    return ExperimentReport("bernstein", rows, metadata=meta).finalize()


def check_bernstein_growth(p: float, n: int = 64, k: int = 64, mu_list=range(9), trials: int = 50,
                           seed: int = 0) -> ExperimentReport:
    """max over P of ||delta_k^{mu+1} P'||_p / ((mu+1) ||delta_k^mu P||_p) for each mu.

    Rows use the ``n`` column for mu.
    """
    rule = _poly_rule(None, max(n, k))
    x = rule.nodes
    dk = delta_max(k, x)
    polys = random_polys(n, trials, seed)
    rows = []
    for mu in mu_list:
        best = None
        for t, P in enumerate(polys):
            lhs = rule.norm(dk ** (mu + 1) * P.derivative(1)(x), p)
            rhs = (mu + 1) * rule.norm(dk**mu * P(x), p)
            if best is None or lhs / rhs > best[0] / best[1]:
                best = (lhs, rhs, t)
        rows.append(ReportRow(int(mu), 1, p, best[0], best[1], f"trial={best[2]}"))
    meta = _meta(n=n, k=k, p=p, trials=trials, seed=seed, column_n="mu",
                 rule={"kind": "consecutive", "max_step": 1.5})
    return ExperimentReport("bernstein_growth", rows, metadata=meta).finalize()


def check_factorial_bernstein(w: Weight | None, p: float, n, r: int, l: int, trials: int = 50,
                              cfg: QuadratureConfig = DEFAULT_CFG, variant: str = "delta",
                              seed: int = 0) -> ExperimentReport:
    """Factorial-normalized Bernstein ratios for 0 < p < 1.

    For ``variant="delta"`` the ratio is ||delta_n^r P^{(r)}|| / ||delta_n^l P^{(l)}||
    divided by 2^l r!/l!; for ``variant="phi"`` phi replaces delta_n and the
    normalization also carries n^{r-l}. The fitted c_* is the normalized
    ratio to the power 1/(r-l).

    Raises:
        ParameterError: p >= 1 (use `check_bernstein`), or l, r out of range.
    """
    if p >= 1:
        raise ParameterError("check_factorial_bernstein is for 0 < p < 1; use check_bernstein")
    n_list = [n] if np.isscalar(n) else list(n)
    rows = []
    c_star = {}
    for nn in n_list:
        if not 0 <= l <= r <= nn - 1:
            raise ParameterError("need 0 <= l <= r <= n - 1")
        rule = _poly_rule(w, nn)
        x = rule.nodes
        scale = delta_n(nn, x) if variant == "delta" else phi(x)
        norm = 2.0**l * math.factorial(r) / math.factorial(l)
        if variant == "phi":
            norm *= float(nn) ** (r - l)
        best = None
        for k, P in enumerate(random_polys(nn, trials, seed)):
            num = rule.norm(scale**r * P.derivative(r)(x), p)
            den = rule.norm(scale**l * P.derivative(l)(x), p)
            if den == 0.0:
                continue
            if best is None or num / den > best[0] / best[1]:
                best = (num, den, k)
        lhs = best[0] / best[1]
        rows.append(ReportRow(nn, r, p, lhs, norm, f"trial={best[2]};l={l}"))
        c_star[nn] = (lhs / norm) ** (1.0 / (r - l)) if r > l else 1.0
    meta = _meta(weight=_label(w), p=p, r=r, l=l, variant=variant, trials=trials, seed=seed,
                 c_star={str(k): v for k, v in c_star.items()}, rule={"kind": "trend", "max_slope": math.log(2.0) / math.log(2.0)})
    # stability of c_* across n: spread within 2x
    meta["rule"] = {"kind": "trend", "max_slope": 1.0, "max_spread": 2.0 ** max(r - l, 1)}
    return ExperimentReport("factorial_bernstein", rows, metadata=meta).finalize()


# ---------------------------------------------------------------------------
# Polynomial moduli
# ---------------------------------------------------------------------------


def check_poly_modulus_bound(w: Weight, delta: float, gamma: float, r: int, p: float, n: int, m: int,
                             trials: int = 10, cfg: QuadratureConfig = DEFAULT_CFG, seed: int = 0,
                             levels: int = 12, use_norm: bool = False) -> ExperimentReport:
    """Largest c = 2^-j with omega^r(P_m, c t)_{p,w_n} <= (n/m)^{delta/p} (t m)^r ||delta_m^r P_m^{(r)}||_{p,w_m}.

    t ranges over {1/m, 1/(2m)}; ``use_norm`` puts ||P_m||_{p,w_m} on the
    right instead. Rows hold the margins at the c found (c in the witness).

    Raises:
        ParameterError: p >= 1, m > n, gamma > r p, or the class check fails.
    """
    if not 0 < p < 1:
        raise ParameterError("check_poly_modulus_bound is for 0 < p < 1")
    if m > n:
        raise ParameterError("need m <= n")
    if gamma > r * p:
        raise ParameterError("need gamma <= r p")
    ok, lam_a, lam_b = class_passes(w, delta, gamma)
    if not ok:
        raise ParameterError(f"weight {w.label} fails the class check for ({delta}, {gamma}): "
                             f"constant {lam_a:.4g} grows to {lam_b:.4g}")
    ev_n = wn_evaluator(w, n)
    rule_m = _poly_rule(w, m)
    x = rule_m.nodes
    polys = random_polys(m, trials, seed)
    rhs_cache = {}
    for k, P in enumerate(polys):
        base = rule_m.norm(P(x), p) if use_norm else rule_m.norm(delta_n(m, x) ** r * P.derivative(r)(x), p)
        rhs_cache[k] = base
    ts = (1.0 / m, 1.0 / (2 * m))

    def margins(c):
        out = []
        for k, P in enumerate(polys):
            f = lambda u, P=P: P(u, check=False)
            for t in ts:
                lhs = weighted_modulus(ModulusQuery(f, r, c * t, p, ev_n))
                rhs = (n / m) ** (delta / p) * (t * m) ** r * rhs_cache[k]
                out.append((k, t, lhs, rhs))
        return out

    found, rows_data = None, None
    for j in range(levels + 1):
        c = 2.0**-j
        data = margins(c)
        if all(lhs <= rhs for _, _, lhs, rhs in data):
            found, rows_data = c, data
            break
    if found is None:
        rows_data = margins(2.0**-levels)
    c_tag = _fmt(found) if found is not None else "none"
    rows = [ReportRow(m, r, p, lhs, rhs, f"c={c_tag};trial={k};t={_fmt(t)}") for k, t, lhs, rhs in rows_data]
    meta = _meta(weight=w.label, delta=delta, gamma=gamma, r=r, p=p, n=n, m=m, trials=trials, seed=seed,
                 c_diamond=found, class_constant=lam_a, use_norm=use_norm, rule={"kind": "max", "high": 1.0})
    return ExperimentReport("poly_modulus_bound", rows, metadata=meta).finalize()


def _bracket_ratios(P, r, p, ev, rule, hs):
    x = rule.nodes
    f = lambda u: P(u, check=False)
    dnorm = rule.norm(phi(x) ** r * P.derivative(r)(x), p)
    q = ModulusQuery(f, r, float(max(hs)), p, ev)
    diff = difference_norms(q, hs)
    return diff, np.asarray(hs) ** r * dnorm


def check_difference_bracket(w: Weight | None, r: int, p: float, n: int, trials: int = 50, seed: int = 0,
                             c_diamond: float | None = None, calibration_trials: int = 10, h_points: int = 12,
                             levels: int = 12) -> ExperimentReport:
    """||Delta_{h phi}^r P||_{p,w_n} / (h^r ||phi^r P^{(r)}||_{p,w_n}) for h <= c/n.

    When ``c_diamond`` is None it is found by bisection over c = 2^-j on
    ``calibration_trials`` polynomials drawn with a different seed; the
    bracket is then checked on ``trials`` fresh polynomials.
    """
    low, high = 0.5 ** (1.0 / p), 1.5 ** (1.0 / p)
    ev = None if w is None else wn_evaluator(w, n)
    rule = _poly_rule(w, n)

    def grid(c):
        return (c / n) * 1.25 ** -np.arange(h_points)

    def worst(polys, c):
        lo, hi = math.inf, 0.0
        for P in polys:
            d, b = _bracket_ratios(P, r, p, ev, rule, grid(c))
            ratio = d / b
            lo, hi = min(lo, ratio.min()), max(hi, ratio.max())
        return lo, hi

    if c_diamond is None:
        calib = random_polys(n, calibration_trials, seed + 7919)
        c_diamond = 2.0**-levels
        for j in range(levels + 1):
            c = 2.0**-j
            lo, hi = worst(calib, c)
            if low <= lo and hi <= high:
                c_diamond = c
                break
    rows = []
    for k, P in enumerate(random_polys(n, trials, seed)):
        hs = grid(c_diamond)
        d, b = _bracket_ratios(P, r, p, ev, rule, hs)
        for h, dd, bb in zip(hs, d, b):
            rows.append(ReportRow(n, r, p, float(dd), float(bb), f"trial={k};h={_fmt(h)}"))
    meta = _meta(weight=_label(w), r=r, p=p, n=n, trials=trials, seed=seed, c_diamond=c_diamond,
                 rule={"kind": "bracket", "low": low * 0.99, "high": high * 1.01})
    return ExperimentReport("difference_bracket", rows, metadata=meta).finalize()


# ---------------------------------------------------------------------------
# Jackson, inverse and equivalence checks
# ---------------------------------------------------------------------------


def _is_low_poly(f, r):
    deg = getattr(f, "poly_degree", None)
    return deg is not None and deg <= r - 1


def jackson_lhs(f, w, n, r, p, cfg=DEFAULT_CFG):
    """E_n(f)_{p,w_n} for p >= 1; the Jackson-operator error for p < 1."""
    ev = None if w is None else wn_evaluator(w, n)
    if p >= 1:
        return best_approx(f, n, p, ev, cfg).error, "best"
    P = jackson_operator(f, n, r, p, w)
    rule = NormRule.for_problem(f, ev, n=n, fine=True)
    return rule.norm(np.asarray(f(rule.nodes), dtype=float) - P(rule.nodes), p), f"operator_degree={P.degree}"


def check_jackson(f: Callable, w: Weight | None, r: int, p: float, n_list, theta: float = 0.5,
                  cfg: QuadratureConfig = DEFAULT_CFG) -> ExperimentReport:
    """Approximation error against the averaged modulus at theta/n."""
    rows = []
    for n in n_list:
        if _is_low_poly(f, r):
            rows.append(ReportRow(n, r, p, 0.0, 0.0, "degenerate"))
            continue
        lhs, how = jackson_lhs(f, w, n, r, p, cfg)
        ev = None if w is None else wn_evaluator(w, n)
        q = ModulusQuery(f, r, theta / n, p, ev, singular_points=tuple(getattr(f, "singular_points", ())))
        rhs = averaged_modulus(q)
        rows.append(ReportRow(n, r, p, lhs, rhs, how))
    meta = _meta(function=getattr(f, "name", "f"), weight=_label(w), r=r, p=p, theta=theta,
                 lhs_kind="best" if p >= 1 else "operator", rule={"kind": "trend", "max_slope": 0.1})
    return ExperimentReport("jackson", rows, metadata=meta).finalize()


def _dyadic_sum(E, n, exponent, power):
    """Lower and upper bounds of sum_{k=1}^n k^exponent E_k^power from E at 2^j and n.

    E_k is nonincreasing, so on [2^j, 2^{j+1}) it lies between the values
    at the two ends.
    """
    knots = sorted(E)
    lo = hi = 0.0
    for a, b in zip(knots, knots[1:] + [n + 1]):
        ks = np.arange(a, min(b, n + 1))
        if ks.size == 0:
            continue
        s = float(np.sum(ks.astype(float) ** exponent))
        hi += s * E[a] ** power
        nxt = E.get(b, E[knots[-1]])
        lo += s * nxt**power
    return lo, hi


def check_inverse(f: Callable, w: Weight, delta: float, gamma: float, r: int, p: float, n_list,
                  cfg: QuadratureConfig = DEFAULT_CFG, c_diamond: float = 1.0,
                  skip_class_check: bool = False) -> ExperimentReport:
    """Modulus at 1/n (c_diamond/n for p < 1) against the weighted sum of E_k.

    rhs is the lower bound of the sum (E_k computed at k = 1, 2, 4, ... and
    n); the upper bound goes into the witness column.
    """
    lp = lambda_p(p)
    if gamma > r * lp:
        raise ParameterError("need gamma <= r * lambda_p")
    if not skip_class_check:
        ok, lam_a, lam_b = class_passes(w, delta, gamma)
        if not ok:
            raise ParameterError(f"weight {w.label} fails the class check for ({delta}, {gamma})")
    sp = tuple(getattr(f, "singular_points", ()))
    E_all = {}
    rows = []
    for n in n_list:
        ks = sorted({2**j for j in range(int(math.log2(n)) + 1)} | {n})
        for k in ks:
            if k not in E_all:
                E_all[k] = best_approx(f, k, p, wn_evaluator(w, k), cfg).error
        E = {k: E_all[k] for k in ks}
        # enforce monotonicity of the sampled values (E_k is nonincreasing)
        run = math.inf
        for k in ks:
            run = min(run, E[k])
            E[k] = run
        t = (c_diamond if p < 1 else 1.0) / n
        q = ModulusQuery(f, r, t, p, wn_evaluator(w, n), singular_points=sp)
        lhs = weighted_modulus(q)
        if p >= 1:
            lo, hi = _dyadic_sum(E, n, r - 1 - delta / lp, 1.0)
            scale = float(n) ** -(r - delta / lp)
            rhs_lo, rhs_hi = scale * lo, scale * hi
        else:
            lo, hi = _dyadic_sum(E, n, r * p - delta - 1, p)
            scale = float(n) ** -(r - delta / p)
            rhs_lo, rhs_hi = scale * lo ** (1 / p), scale * hi ** (1 / p)
        if _is_low_poly(f, 1):
            lhs = rhs_lo = 0.0
        rows.append(ReportRow(n, r, p, lhs, rhs_lo, f"rhs_upper={_fmt(rhs_hi)}"))
    meta = _meta(function=getattr(f, "name", "f"), weight=w.label, delta=delta, gamma=gamma, r=r, p=p,
                 c_diamond=c_diamond, e_k_upper_bounds=p < 1, rule={"kind": "trend", "max_slope": 0.1})
    return ExperimentReport("inverse", rows, metadata=meta).finalize()


def equivalence_quantities(f, w, r, p, n, t, cfg=DEFAULT_CFG) -> dict:
    """omega, averaged omega, K (p >= 1), both realizations and R* at one (n, t)."""
    ev = None if w is None else wn_evaluator(w, n)
    q = ModulusQuery(f, r, t, p, ev, singular_points=tuple(getattr(f, "singular_points", ())))
    out = {"omega": weighted_modulus(q), "omega_avg": averaged_modulus(q)}
    Rn = realization(f, n, r, t, p, w, "phi_n", cfg)
    R = realization(f, n, r, t, p, w, "phi", cfg, candidates=[Rn.argmin_poly])
    if p >= 1:
        out["K"] = k_functional(f, r, t, p, w, n, cfg, candidates=[R.argmin_poly, Rn.argmin_poly])
    out["R_phi"] = R.value
    out["R_phi_n"] = Rn.value
    out["R_star"] = R.star_value
    return out


def check_equivalence(f: Callable, w: Weight | None, r: int, p: float, n_list, A: float = 0.5, B: float = 1.0,
                      cfg: QuadratureConfig = DEFAULT_CFG, bound: float = 20.0) -> ExperimentReport:
    """All pairwise ratios among the modulus-type quantities at t = A/n and B/n.

    Rows tagged "pair:" carry a/b for every pair (bracket [1/bound, bound]);
    rows tagged "chain:" carry K/R_phi, R_phi/R_phi_n and omega_avg/omega
    (each must be <= 1, the last with a small quadrature slack).
    """
    rows = []
    for n in n_list:
        for t in sorted({A / n, B / n}):
            vals = equivalence_quantities(f, w, r, p, n, t, cfg)
            names = list(vals)
            for a, b in combinations(names, 2):
                rows.append(ReportRow(n, r, p, vals[a], vals[b], f"pair:{a}/{b};t={_fmt(t)}"))
            chain = [("R_phi", "R_phi_n"), ("omega_avg", "omega")]
            if "K" in vals:
                chain.insert(0, ("K", "R_phi"))
            for a, b in chain:
                rows.append(ReportRow(n, r, p, vals[a], vals[b], f"chain:{a}/{b};t={_fmt(t)}"))
    rule = {"kind": "all", "parts": [["pair:", {"kind": "bracket", "low": 1.0 / bound, "high": bound}],
                                      ["chain:", {"kind": "max", "high": 1.0 + 1e-9}]]}
    meta = _meta(function=getattr(f, "name", "f"), weight=_label(w), r=r, p=p, A=A, B=B, bound=bound, rule=rule)
    rep = ExperimentReport("equivalence", rows, metadata=meta)
    # the averaged modulus may exceed the grid-sup modulus by quadrature noise only
    for row in rows:
        if row.witness.startswith("chain:omega_avg") and row.ratio > 1.0 + 1e-9:
            rep.metadata.setdefault("notes", []).append("omega_avg above omega beyond 1e-9")
    return rep.finalize()


def check_rate_equivalence(f: Callable, w: Weight | None, r: int, p: float, alpha_hint: float | None, n_list,
                           cfg: QuadratureConfig = DEFAULT_CFG, tolerance: float = 0.1) -> ExperimentReport:
    """Fitted decay rates of E_n and of omega^{r+1}(f, 1/n) (and omega^r)."""
    sp = tuple(getattr(f, "singular_points", ()))
    rows = []
    E, W1, W0 = [], [], []
    for n in n_list:
        ev = None if w is None else wn_evaluator(w, n)
        e = best_approx(f, n, p, ev, cfg).error
        om = weighted_modulus(ModulusQuery(f, r + 1, min(1.0 / n, 2.0 / (r + 1)), p, ev, singular_points=sp))
        om_r = weighted_modulus(ModulusQuery(f, r, min(1.0 / n, 2.0 / r), p, ev, singular_points=sp))
        rows.append(ReportRow(n, r, p, e, om, f"omega_r={_fmt(om_r)}"))
        E.append((n, e))
        W1.append((n, om))
        W0.append((n, om_r))
    fmax = float(np.max(np.abs(f(np.cos(np.linspace(0.0, np.pi, 257))))))
    floor = 1e-13 * max(max(v for _, v in E), fmax, 1e-300)
    at_floor = [v <= floor for _, v in E]
    is_poly = getattr(f, "poly_degree", None) is not None or isinstance(f, ChebPoly)
    saturated = is_poly and any(at_floor)
    meta = _meta(function=getattr(f, "name", "f"), weight=_label(w), r=r, p=p, alpha_hint=alpha_hint,
                 tolerance=tolerance, saturated=bool(saturated), rule={"kind": "rate"})
    if not saturated:
        # fit only above the rounding floor; reaching it marks super-algebraic decay
        live = [i for i, hit in enumerate(at_floor) if not hit]
        super_alg = any(at_floor)
        if len(live) >= 4:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                a_e = fit_rate([E[i] for i in live])
                a_w = fit_rate([W1[i] for i in live])
                a_w0 = fit_rate([W0[i] for i in live])
            meta.update(alpha_E=a_e, alpha_omega=a_w, alpha_omega_r=a_w0)
            local = [-_slope([n1, n2], [v1, v2]) for (n1, v1), (n2, v2) in zip(E, E[1:]) if v1 > floor and v2 > floor]
            super_alg = super_alg or bool(len(local) >= 2 and a_e > 4 and local[-1] > 1.5 * local[0])
        elif not super_alg:
            raise ParameterError("rate fit needs at least 4 values above the rounding floor")
        meta["super_algebraic"] = bool(super_alg)
    return ExperimentReport("rate_equivalence", rows, metadata=meta).finalize()


# ---------------------------------------------------------------------------
# Weight-side checks
# ---------------------------------------------------------------------------


def check_qn(w: Weight, p: float, n_list, nu0: int = 2, cfg: QuadratureConfig = DEFAULT_CFG,
             grid_size: int = 1024, max_ratio: float = 50.0) -> ExperimentReport:
    """Two-sided envelope ratio of Q_n against w_n^{1/p} and the derivative bounds.

    Rows tagged "ratio" hold (grid-sup, grid-inf) of Q_n / w_n^{1/p}; rows
    tagged "nu=k" hold the sup of |delta_n^k Q_n^{(k)}| / w_n^{1/p} against 1;
    rows tagged "below" hold min(Q_n - S_n) against 0 scale (lhs <= 0 means a
    violation of S_n <= Q_n).
    """
    inv_p = 1.0 if math.isinf(p) else 1.0 / p
    rows = []
    for n in n_list:
        Q = qn_weight_poly(w, n, p, nu0, cfg=cfg)
        ev = wn_evaluator(w, n)
        x = sweep_grid([n], w, grid_size)
        target = ev(x) ** inv_p
        v = Q.values(x)
        ratio = v / target
        rows.append(ReportRow(n, 0, p, float(ratio.max()), float(ratio.min()),
                              f"ratio;x_sup={_fmt(x[np.argmax(ratio)])};x_inf={_fmt(x[np.argmin(ratio)])}"))
        S = Q.step_values(x)
        gap = float(np.min((v - S) / S))
        rows.append(ReportRow(n, 0, p, gap, 1.0, "below"))
        for nu in range(1, nu0 + 1):
            d = np.abs(delta_n(n, x) ** nu * Q.derivative_values(x, nu)) / target
            rows.append(ReportRow(n, nu, p, float(d.max()), 1.0, f"nu={nu};x={_fmt(x[np.argmax(d)])}"))
    parts = [["ratio", {"kind": "max", "high": max_ratio}],
             ["ratio", {"kind": "consecutive", "max_step": 1.5}],
             ["below", {"kind": "bracket", "low": -1e-9, "high": math.inf}]]
    # derivative ratios are relative to w_n^{1/p}; below 1e-10 they are roundoff
    parts += [[f"nu={nu}", {"kind": "consecutive", "max_step": 1.5, "floor": 1e-10}] for nu in range(1, nu0 + 1)]
    meta = _meta(weight=w.label, p=p, nu0=nu0, grid_size=grid_size, exponent=inv_p,
                 rule={"kind": "all", "parts": parts})
    return ExperimentReport("qn", rows, metadata=meta).finalize()


def check_class(w: Weight, delta: float, gamma: float, n_list, cfg: QuadratureConfig = DEFAULT_CFG,
                bound: float | None = None) -> ExperimentReport:
    """Class-inequality constant over n, m <= N for growing N.

    With ``bound`` the verdict requires every constant <= bound; otherwise
    it requires growth by at most 1.5x between consecutive N.
    """
    n_list = sorted(n_list)
    rows = []
    for k in range(1, len(n_list) + 1):
        rep = class_membership(w, delta, gamma, n_list[:k])
        wn, wm, wx = rep.witness
        rows.append(ReportRow(n_list[k - 1], delta, gamma, rep.lambda_est, 1.0, f"n={wn};m={wm};x={_fmt(wx)}"))
    rule = {"kind": "max", "high": bound} if bound is not None else {"kind": "consecutive", "max_step": 1.5}
    meta = _meta(weight=w.label, delta=delta, gamma=gamma, in_upsilon=bool(delta >= 1 and delta + gamma >= 2),
                 column_p="gamma", column_r="delta", rule=rule)
    return ExperimentReport("class", rows, metadata=meta).finalize()
