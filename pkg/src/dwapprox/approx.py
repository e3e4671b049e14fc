"""Best weighted approximation, the partition-based Jackson operator, the
envelope polynomial Q_n, realization functionals and the K-functional.

All solvers work on a fixed discretization of the interval: composite
Gauss-Legendre panels on Chebyshev-spaced edges, graded toward the
declared nonsmooth points of f and of the weight. Reported errors are then
re-evaluated on a finer rule of the same kind, so the number stored in a
result is the norm of the returned polynomial, not the discrete objective.

A function may carry its nonsmooth points in a ``singular_points``
attribute; the rules pick them up automatically.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy import sparse
from scipy.optimize import linprog, minimize, minimize_scalar

from .partition import CauchyCircle, DeviationLayout, make_partition, partition_polys
from .poly_core import (
    DEFAULT_CFG,
    ChebPoly,
    ParameterError,
    QuadratureConfig,
    cheb_grid,
)
from .weights import Weight, WnEvaluator, delta_n, estimate_growth_exponents, phi

__all__ = [
    "UnsupportedExponentError",
    "NormRule",
    "BestApproxResult",
    "best_approx",
    "lambda_p",
    "wn_evaluator",
    "default_mu",
    "jackson_operator",
    "QnResult",
    "qn_weight_poly",
    "RealizationResult",
    "realization",
    "realization_objective",
    "k_functional",
]

log = logging.getLogger(__name__)

#: floor on mu for the partition polynomials
C_STAR = 4


class UnsupportedExponentError(ParameterError):
    """The requested functional is degenerate for this exponent."""


def lambda_p(p: float) -> float:
    """p for finite p and 1 for p = inf; the normalizing exponent of the inverse bounds."""
    return 1.0 if math.isinf(p) else float(p)


@lru_cache(maxsize=256)
def wn_evaluator(weight: Weight, n: int) -> WnEvaluator:
    """Shared WnEvaluator per (weight, n)."""
    return WnEvaluator(weight, n)


@lru_cache(maxsize=64)
def _growth_exponent(weight: Weight) -> float:
    return estimate_growth_exponents(weight, [8, 16, 32, 64])[1]


def default_mu(weight: Weight | None, r: int, p: float, nu0: int | None = None) -> int:
    """ceil(s / lambda_p) + r + ceil(nu0 / 2) + 3 with s fitted from the weight."""
    nu0 = r + 1 if nu0 is None else nu0
    s = 0.0 if weight is None else _growth_exponent(weight)
    mu = math.ceil(s / lambda_p(p) - 1e-9) + r + math.ceil(nu0 / 2) + 3
    return max(mu, C_STAR)


# ---------------------------------------------------------------------------
# Discretization
# ---------------------------------------------------------------------------


def _singular_points(obj) -> tuple:
    pts = getattr(obj, "singular_points", ())
    return tuple(float(c) for c in (pts() if callable(pts) else pts))


def _weight_breaks(weight) -> list:
    if weight is None:
        return []
    out = list(_singular_points(weight))
    if isinstance(weight, WnEvaluator):
        out.extend(weight.kinks().tolist())
    elif isinstance(weight, Weight):
        out.extend(weight.breakpoints)
    return out


@dataclass(frozen=True, eq=False)
class NormRule:
    """Nodes with quadrature weights for weighted L^p norms on an interval.

    Attributes:
        interval: (a, b).
        nodes: all nodes, panel edges included (edges carry zero weight).
        quad: quadrature weights times the weight function.
        wvals: weight function values (used for p = inf).
    """

    interval: tuple
    nodes: np.ndarray
    quad: np.ndarray
    wvals: np.ndarray

    @classmethod
    def build(cls, interval=(-1.0, 1.0), weight: Callable | None = None, breakpoints: Sequence[float] = (),
              panels: int = 512, order: int = 8, grading: int = 30, graded: Sequence[float] | None = None
              ) -> "NormRule":
        """Composite rule with edges at ``breakpoints``; the ``graded`` ones
        (all breakpoints by default) also get geometric panels around them."""
        a, b = map(float, interval)
        edges = [cheb_grid(panels + 1, a, b)]
        span = b - a
        graded = breakpoints if graded is None else graded
        inside = [float(c) for c in (*breakpoints, *graded) if a <= c <= b]
        if inside:
            edges.append(np.array(inside))
        offs = span * 2.0 ** -np.arange(4, 4 + grading)
        for c in graded:
            if a <= c <= b:
                edges.append(c + offs)
                edges.append(c - offs)
        e = np.unique(np.clip(np.concatenate(edges), a, b))
        e = e[np.concatenate([[True], np.diff(e) > 1e-15 * span])]
        t, w = np.polynomial.legendre.leggauss(order)
        half = 0.5 * np.diff(e)
        x = (e[:-1, None] + half[:, None] * (t + 1.0)).ravel()
        q = (half[:, None] * w).ravel()
        nodes = np.concatenate([x, e])
        quad = np.concatenate([q, np.zeros(e.size)])
        wv = np.ones(nodes.size) if weight is None else np.asarray(weight(nodes), dtype=float)
        order_ix = np.argsort(nodes, kind="stable")
        return cls((a, b), nodes[order_ix], (quad * wv)[order_ix], wv[order_ix])

    @classmethod
    def for_problem(cls, f, weight, interval=(-1.0, 1.0), n: int = 1, fine: bool = False,
                    extra_breaks: Sequence[float] = ()) -> "NormRule":
        """Solve rule (about max(20n, 256) nodes) or the finer evaluation rule."""
        f_breaks = [*_singular_points(f), *extra_breaks]
        w_breaks = _weight_breaks(weight)
        if fine:
            return cls.build(interval, weight, f_breaks + w_breaks, panels=max(1024, 16 * n), order=8, grading=40)
        return cls.build(interval, weight, f_breaks + w_breaks, panels=max(20 * n, 256) // 4, order=4,
                         grading=8, graded=f_breaks)

    def norm(self, values, p: float) -> float:
        v = np.abs(np.asarray(values, dtype=float))
        if math.isinf(p):
            return float(np.max(v * self.wvals))
        return float(np.sum(v**p * self.quad) ** (1.0 / p))


def _local_vander(x, degree, interval):
    a, b = interval
    u = (2.0 * x - a - b) / (b - a)
    return cheb.chebvander(np.clip(u, -1.0, 1.0), degree)


def _to_global(coeffs, interval) -> ChebPoly:
    a, b = map(float, interval)
    if (a, b) == (-1.0, 1.0):
        return ChebPoly(coeffs)
    series = np.polynomial.Chebyshev(coeffs, domain=[a, b]).convert(domain=[-1.0, 1.0])
    return ChebPoly(series.coef)


# ---------------------------------------------------------------------------
# Discrete solvers
# ---------------------------------------------------------------------------


_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _lstsq(A, y):
    coeffs, _, rank, sv = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        warnings.warn("rank-deficient least squares; retrying with Tikhonov regularization",
                      RuntimeWarning, stacklevel=3)
        lam = 1e-12 * (sv[0] if sv.size else 1.0)
        A2 = np.vstack([A, lam * np.eye(A.shape[1])])
        coeffs = np.linalg.lstsq(A2, np.concatenate([y, np.zeros(A.shape[1])]), rcond=None)[0]
    return coeffs


def _weighted_l1(V, y, q, extra=None):
    """argmin_c sum q |V c - y| (+ sum q2 |B c| when extra = (B, q2)).

    Solved through the dual LP max y.u s.t. A^T u = 0, |u_j| <= q_j, whose
    equality multipliers are the primal coefficients.
    """
    keep = q > 0
    A, b, g = V[keep], y[keep], q[keep]
    if extra is not None:
        B, q2 = extra
        k2 = q2 > 0
        A = np.vstack([A, B[k2]])
        b = np.concatenate([b, np.zeros(np.count_nonzero(k2))])
        g = np.concatenate([g, q2[k2]])
    args = dict(A_eq=A.T, b_eq=np.zeros(A.shape[1]), bounds=np.c_[-g, g], method="highs")
    res = linprog(-b, options=_LP_OPTIONS, **args)
    if res.status != 0:
        res = linprog(-b, **args)
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    return -np.asarray(res.eqlin.marginals)


def _weighted_minimax(V, y, wv, extra=None):
    """argmin_c max wv |V c - y| (+ tau max wb |B c| when extra = (B, wb, tau))."""
    keep = wv > 0
    V, y, wv = V[keep], y[keep], wv[keep]
    m, d = V.shape
    nt = 1 if extra is None else 2
    A = wv[:, None] * V
    cols_t = np.zeros((m, nt))
    cols_t[:, 0] = -1.0
    rows = [np.hstack([A, cols_t]), np.hstack([-A, cols_t])]
    rhs = [wv * y, -wv * y]
    cost = np.concatenate([np.zeros(d), [1.0]])
    if extra is not None:
        B, wb, tau = extra
        k2 = wb > 0
        Bw = wb[k2, None] * B[k2]
        c2 = np.zeros((Bw.shape[0], 2))
        c2[:, 1] = -1.0
        rows += [np.hstack([Bw, c2]), np.hstack([-Bw, c2])]
        rhs += [np.zeros(Bw.shape[0])] * 2
        cost = np.concatenate([np.zeros(d), [1.0, tau]])
    A_ub = sparse.csr_matrix(np.vstack(rows))
    b_ub = np.concatenate(rhs)
    bounds = [(None, None)] * d + [(0, None)] * nt
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs", options=_LP_OPTIONS)
    if res.status != 0:
        # tight tolerances occasionally stall HiGHS; the defaults are still fine for a candidate
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    return res.x[:d], res.fun


def _smooth_lp(V, y, q, p, start):
    """argmin sum q |V c - y|^p for 1 < p < inf (convex and C^1)."""
    scale = max(float(np.sum(q * np.abs(V @ start - y) ** p)), 1e-300)

    def fun(c):
        r = V @ c - y
        a = np.abs(r)
        val = np.sum(q * a**p) / scale
        grad = V.T @ (q * p * a ** (p - 1.0) * np.sign(r)) / scale
        return val, grad

    res = minimize(fun, start, jac=True, method="L-BFGS-B", options={"maxiter": 2000, "ftol": 1e-14, "gtol": 1e-12})
    return res.x, bool(res.success)


def _concave_search(V, y, q, p, start, extra=None, iterations=150, lp_steps=3, tol=1e-10):
    """Local search for 0 < p < 1 by majorize-minimize.

    First smoothed reweighted least squares (the quadratic tangent of
    (r^2 + eps^2)^{p/2} majorizes it), with eps shrinking geometrically;
    then a few steps with the linear tangent of |r|^p, each a weighted L1
    problem. The best iterate under the true objective is returned.
    """
    blocks = [(V, y, q)]
    if extra is not None:
        B, q2 = extra
        blocks.append((B, np.zeros(B.shape[0]), q2))
    A = np.vstack([blk[0] for blk in blocks])
    b = np.concatenate([blk[1] for blk in blocks])
    g = np.concatenate([blk[2] for blk in blocks])
    live = g > 0
    A, b, g = A[live], b[live], g[live]

    def objective(c):
        return float(np.sum(g * np.abs(A @ c - b) ** p))

    c = np.asarray(start, dtype=float)
    best_c, best = c, objective(c)
    if best == 0.0:
        return c, best
    scale = max(float(np.max(np.abs(A @ c - b))), 1e-14 * float(np.max(np.abs(b))), 1e-300)
    eps = 1e-2 * scale
    floor = 1e-13 * scale
    for _ in range(iterations):
        r = A @ c - b
        wts = g * (r * r + eps * eps) ** (0.5 * p - 1.0)
        s = np.sqrt(wts / wts.max())
        c = np.linalg.lstsq(s[:, None] * A, s * b, rcond=None)[0]
        val = objective(c)
        if val < best:
            best_c, best = c, val
        eps = max(0.8 * eps, floor)
    c = best_c
    for _ in range(lp_steps):
        r = np.abs(A @ c - b)
        gg = g * p * (r + floor) ** (p - 1.0)
        c_new = _weighted_l1(A, b, gg)
        val = objective(c_new)
        if val >= best * (1.0 - tol):
            break
        c, best = c_new, val
    return c, best


# ---------------------------------------------------------------------------
# Best approximation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BestApproxResult:
    """Outcome of a best-approximation solve.

    Attributes:
        poly: the approximant (degree <= n - 1).
        error: ||f - poly||_{p,w} on the fine rule.
        certified: "exact" (p = 2), "exchange" (p = inf converged),
            "convex" (1 <= p < inf), "upper-bound" (p < 1 local search),
            or "unconverged".
        p: exponent; lambda_p: p, or 1 for p = inf.
    """

    poly: ChebPoly
    error: float
    certified: str
    p: float
    lambda_p: float
    interval: tuple = (-1.0, 1.0)


def _values(f, x):
    return np.asarray(f(x), dtype=float) * np.ones(np.shape(x))


def _solve_best(V, y, q, wv, p, solve_nodes, f, interval, degree, fine):
    """Coefficients and certificate on a discrete rule."""
    if p == 2.0:
        s = np.sqrt(q)
        return _lstsq(s[:, None] * V, s * y), "exact"
    if math.isinf(p):
        nodes, Vc, yc, wc = solve_nodes, V, y, wv
        coeffs, level = _weighted_minimax(Vc, yc, wc)
        status = "unconverged"
        Vf = _local_vander(fine.nodes, degree, interval)
        yf = _values(f, fine.nodes)
        for _ in range(8):
            err = fine.wvals * np.abs(Vf @ coeffs - yf)
            peak = float(err.max())
            if peak <= level * (1.0 + 1e-8) + 1e-300:
                status = "exchange"
                break
            # add the local maxima of the fine-rule error that exceed the level
            interior = np.r_[True, err[1:] >= err[:-1]] & np.r_[err[:-1] >= err[1:], True]
            cand = np.where(interior & (err > level))[0]
            cand = cand[np.argsort(err[cand])[::-1][: 4 * (degree + 1)]]
            Vc = np.vstack([Vc, Vf[cand]])
            yc = np.concatenate([yc, yf[cand]])
            wc = np.concatenate([wc, fine.wvals[cand]])
            coeffs, level = _weighted_minimax(Vc, yc, wc)
        return coeffs, status
    if p == 1.0:
        return _weighted_l1(V, y, q), "convex"
    s = np.sqrt(q)
    start = _lstsq(s[:, None] * V, s * y)
    if p > 1.0:
        coeffs, ok = _smooth_lp(V, y, q, p, start)
        return coeffs, "convex" if ok else "unconverged"
    # 0 < p < 1: multi-start local search
    best_c, best_val = None, math.inf
    for c0 in (start, _weighted_l1(V, y, q)):
        c, val = _concave_search(V, y, q, p, c0)
        if val < best_val:
            best_c, best_val = c, val
    return best_c, "upper-bound"


def best_approx(f: Callable, n: int, p: float, weight: Callable | None = None, cfg: QuadratureConfig = DEFAULT_CFG,
                interval=(-1.0, 1.0), rule: NormRule | None = None) -> BestApproxResult:
    """Near-best polynomial of degree <= n - 1 in the weighted L^p quasinorm.

    Args:
        f: vectorized function (optionally with ``singular_points``).
        n: number of coefficients (Poly_n).
        p: exponent in (0, inf].
        weight: vectorized weight (a WnEvaluator for w_n), or None.
        cfg: quadrature configuration (kept for interface symmetry).
        interval: approximation interval.
        rule: fine rule for the reported error (built when None).

    Returns:
        BestApproxResult; ``error`` is measured on the fine rule.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    p = float(p)
    if not p > 0:
        raise ParameterError(f"exponent p must be positive, got {p}")
    interval = tuple(map(float, interval))
    degree = n - 1
    coarse = NormRule.for_problem(f, weight, interval, n)
    fine = rule or NormRule.for_problem(f, weight, interval, n, fine=True)
    V = _local_vander(coarse.nodes, degree, interval)
    y = _values(f, coarse.nodes)
    coeffs, status = _solve_best(V, y, coarse.quad, coarse.wvals, p, coarse.nodes, f, interval, degree, fine)
    poly = _to_global(coeffs, interval)
    err = fine.norm(_values(f, fine.nodes) - poly(fine.nodes), p)
    return BestApproxResult(poly, err, status, p, lambda_p(p), interval)


# ---------------------------------------------------------------------------
# Jackson operator
# ---------------------------------------------------------------------------


@lru_cache(maxsize=512)
def _local_pieces(f, n: int, r: int, p: float) -> tuple:
    """Near-best p_i in Poly_r on the union of I_i and I_{i-1} (I_0 empty)."""
    part = make_partition(n)
    pieces = []
    for i in range(1, n + 1):
        lo = part.nodes[i]
        hi = part.nodes[i - 2] if i >= 2 else part.nodes[0]
        pieces.append(best_approx(f, r, p, None, interval=(lo, hi)).poly)
    return tuple(pieces)


def jackson_operator(f: Callable, n: int, r: int, p: float, w: Weight | None = None, mu: int | None = None,
                     cfg: QuadratureConfig = DEFAULT_CFG, nu0: int | None = None, reindex: bool = False) -> ChebPoly:
    """P_n = p_n + sum_{i<n} (p_i - p_{i+1}) T_i on the Chebyshev partition.

    Args:
        f: function to approximate.
        n: partition size (or the target degree when ``reindex``).
        r: order of the local approximants p_i (degree <= r - 1).
        p: exponent used for the local solves.
        w: the weight; only used to fit the growth exponent for mu.
        mu: power of the partition kernels; default from `default_mu`.
        nu0: highest derivative order the construction must control.
        reindex: build on a partition of size max(r, n // (4 mu)) so the
            output degree does not exceed about n.

    Raises:
        ParameterError: if n < r.
    """
    if n < r:
        raise ParameterError(f"n={n} must be at least r={r}")
    mu = default_mu(w, r, p, nu0) if mu is None else int(mu)
    m = max(r, n // (4 * mu)) if reindex else n
    pieces = _local_pieces(f, m, r, float(p))
    if m == 1:
        return pieces[0]
    T = partition_polys(m, mu, 0, 0)
    out = pieces[m - 1]
    for i in range(1, m):
        diff = pieces[i - 1] - pieces[i]
        out = out + diff * T[i - 1].poly
    return out


# ---------------------------------------------------------------------------
# Envelope polynomial Q_n
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QnResult:
    """Q_n = s_n + sum (s_i - s_{i+1}) R_i and its value-space evaluators.

    Attributes:
        poly: Q_n as a Chebyshev series.
        n, p, mu, nu0: parameters (p = inf is handled with exponent 1).
        levels: s_1..s_n (grid maxima of w_n^{1/p} on each I_i).
        components: the R_i, i = 1..n-1.
    """

    poly: ChebPoly
    n: int
    p: float
    mu: int
    nu0: int
    levels: np.ndarray = field(repr=False)
    components: tuple = field(repr=False)

    def step_values(self, x):
        """S_n(x) = s_j on I_j."""
        part = make_partition(self.n)
        j = part.index_of(np.asarray(x, dtype=float))
        return self.levels[j - 1]

    def values(self, x):
        """Q_n(x) as S_n(x) plus the accurately computed step deviations."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.step_values(x).astype(float)
        nodes = make_partition(self.n).nodes
        layout = DeviationLayout(self.n, x, 6 * self.mu + 24)
        for i, R in enumerate(self.components, start=1):
            d = self.levels[i - 1] - self.levels[i]
            if d != 0.0:
                out = out + d * R.deviation(x, step=nodes[i], layout=layout)
        return out

    def derivative_values(self, x, nu: int):
        """Q_n^{(nu)}(x) summed from the value-space derivatives of the R_i."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if nu == 0:
            return self.values(x)
        circle = CauchyCircle(self.n, x) if nu >= 2 else None
        out = np.zeros(x.shape)
        for i, R in enumerate(self.components, start=1):
            d = self.levels[i - 1] - self.levels[i]
            if d != 0.0:
                out = out + d * R.derivative_values(x, nu, circle=circle)
        return out


def qn_weight_poly(w: Weight, n: int, p: float, nu0: int = 2, mu: int | None = None,
                   cfg: QuadratureConfig = DEFAULT_CFG, points_per_interval: int = 33) -> QnResult:
    """Polynomial envelope comparable to w_n^{1/p}.

    For p = inf the exponent 1/p is replaced by 1.
    """
    if not p > 0:
        raise ParameterError(f"exponent p must be positive, got {p}")
    inv_p = 1.0 if math.isinf(p) else 1.0 / p
    if mu is None:
        s = _growth_exponent(w)
        mu = max(math.ceil(nu0 / 2 + s * inv_p + 2 - 1e-9), C_STAR)
    part = make_partition(n)
    ev = wn_evaluator(w, n)
    levels = np.empty(n)
    u = np.linspace(0.0, 1.0, points_per_interval)
    for i in range(1, n + 1):
        lo, hi = part.interval(i)
        levels[i - 1] = float(np.max(ev(lo + (hi - lo) * u))) ** inv_p
    lower = partition_polys(n, mu, 1, 0)
    upper = partition_polys(n, mu, 0, 1)
    comps = []
    poly = ChebPoly.constant(levels[n - 1])
    for i in range(1, n):
        d = levels[i - 1] - levels[i]
        R = upper[i] if d >= 0 else lower[i - 1]
        comps.append(R)
        poly = poly + R.poly * d
    return QnResult(poly, n, float(p), int(mu), int(nu0), levels, tuple(comps))


# ---------------------------------------------------------------------------
# Realizations and the K-functional
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RealizationResult:
    """Outcome of a realization minimization.

    Attributes:
        value: best objective found (an upper bound on the infimum).
        argmin_poly: polynomial attaining ``value``.
        variant: "phi" or "phi_n".
        star_value: objective at the near-best approximant (the R* variant).
        best_error: ||f - P*||_{p,w_n} of that approximant.
    """

    value: float
    argmin_poly: ChebPoly
    variant: str
    star_value: float
    best_error: float


def _phi_variant(variant: str, n: int):
    if variant == "phi":
        return phi
    if variant == "phi_n":
        return lambda x: phi(x) + 1.0 / n
    raise ParameterError(f"unknown variant {variant!r}")


def _derivative_vander(x, degree, r):
    """Matrix of T_k^{(r)}(x), k = 0..degree."""
    if r > degree:
        return np.zeros((np.size(x), degree + 1))
    D = cheb.chebder(np.eye(degree + 1), m=r)  # rows: coefficients of the derivative
    return cheb.chebvander(x, degree - r) @ D


def realization_objective(poly: ChebPoly, f, r: int, t: float, p: float, rule: NormRule, variant: str, n: int) -> float:
    """||f - P||_{p,w} + t^r ||phi^r P^{(r)}||_{p,w} on a rule."""
    ph = _phi_variant(variant, n)(rule.nodes)
    x = rule.nodes
    err = rule.norm(_values(f, x) - poly(x), p)
    der = rule.norm(ph**r * poly.derivative(r)(x), p)
    return err + t**r * der


def _realization_candidates(f, degree, r, t, p, coarse, ph, start):
    V = cheb.chebvander(coarse.nodes, degree)
    y = _values(f, coarse.nodes)
    B = (ph**r)[:, None] * _derivative_vander(coarse.nodes, degree, r)
    tau = t**r
    out = []
    if p == 2.0:
        s = np.sqrt(coarse.quad)
        A, b, Bs = s[:, None] * V, s * y, s[:, None] * B

        def solve(loglam):
            lam = math.exp(loglam)
            M = np.vstack([A, math.sqrt(lam) * Bs])
            return np.linalg.lstsq(M, np.concatenate([b, np.zeros(Bs.shape[0])]), rcond=None)[0]

        def obj(loglam):
            c = solve(loglam)
            return np.linalg.norm(A @ c - b) + tau * np.linalg.norm(Bs @ c)

        grid = np.linspace(-30.0, 30.0, 31)
        vals = [obj(g) for g in grid]
        k = int(np.argmin(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        res = minimize_scalar(obj, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
        out.append(solve(res.x if res.fun < vals[k] else grid[k]))
    elif math.isinf(p) or p == 1.0:
        try:
            if math.isinf(p):
                out.append(_weighted_minimax(V, y, coarse.wvals, (B, coarse.wvals, tau))[0])
            else:
                out.append(_weighted_l1(V, y, coarse.quad, (B, tau * coarse.quad)))
        except RuntimeError as exc:
            warnings.warn(f"realization LP skipped: {exc}", RuntimeWarning, stacklevel=3)
    elif p > 1.0:
        q, q2 = coarse.quad, tau**p * coarse.quad

        def fun(c):
            r1 = V @ c - y
            r2 = B @ c
            a1 = np.abs(r1) ** p
            a2 = np.abs(r2) ** p
            n1 = np.sum(q * a1) ** (1 / p)
            n2 = np.sum(q2 * a2) ** (1 / p)
            g1 = V.T @ (q * np.abs(r1) ** (p - 1) * np.sign(r1)) * n1 ** (1 - p) if n1 > 0 else 0.0
            g2 = B.T @ (q2 * np.abs(r2) ** (p - 1) * np.sign(r2)) * n2 ** (1 - p) if n2 > 0 else 0.0
            return n1 + n2, g1 + g2

        out.append(minimize(fun, start, jac=True, method="L-BFGS-B").x)
    else:
        c1 = _weighted_l1(V, y, coarse.quad, (B, tau * coarse.quad))
        for c0 in (start, c1):
            out.append(_concave_search(V, y, coarse.quad, p, c0, (B, tau**p * coarse.quad))[0])
    return out


@lru_cache(maxsize=128)
def _cached_best(f, n, p, ev, cfg):
    return best_approx(f, n, p, ev, cfg, rule=NormRule.for_problem(f, ev, n=n, fine=True))


def _fine_best(f, n, p, ev, cfg, fine):
    """best_approx on the fine rule, shared across realization variants and t."""
    try:
        return _cached_best(f, n, p, ev, cfg)
    except TypeError:  # unhashable f
        return best_approx(f, n, p, ev, cfg, rule=fine)


def realization(f: Callable, n: int, r: int, t: float, p: float, w: Weight | None = None, variant: str = "phi",
                cfg: QuadratureConfig = DEFAULT_CFG, candidates: Sequence[ChebPoly] = ()) -> RealizationResult:
    """inf over Poly_n of ||f - P||_{p,w_n} + t^r ||phi^r P^{(r)}||_{p,w_n}.

    p = 2 follows the Tikhonov path (whose points are exactly the minimizers
    of the sum of the two norms) with a scalar search on the parameter;
    p = 1 and p = inf are linear programs; other p use local search seeded
    from the near-best approximant. Extra ``candidates`` (degree < n) are
    evaluated too, so the result never exceeds their objective values.
    """
    if not t > 0:
        raise ParameterError("t must be positive")
    if n < r:
        raise ParameterError(f"n={n} must be at least r={r}")
    p = float(p)
    ev = None if w is None else wn_evaluator(w, n)
    coarse = NormRule.for_problem(f, ev, n=n)
    fine = NormRule.for_problem(f, ev, n=n, fine=True)
    ph = _phi_variant(variant, n)(coarse.nodes)
    best = _fine_best(f, n, p, ev, cfg, fine)
    start = np.zeros(n)
    start[: best.poly.coeffs.size] = best.poly.coeffs[:n]
    pool = [best.poly]
    for c in _realization_candidates(f, n - 1, r, t, p, coarse, ph, start):
        pool.append(ChebPoly(c))
    for c in candidates:
        if c.degree > n - 1:
            raise ParameterError("candidate degree exceeds n - 1")
        pool.append(c)
    vals = [realization_objective(P, f, r, t, p, fine, variant, n) for P in pool]
    k = int(np.argmin(vals))
    return RealizationResult(float(vals[k]), pool[k], variant, float(vals[0]), best.error)


def _damped_truncations(f, degrees, sample_degree=4096):
    """Chebyshev truncations of f with Jackson-type damping factors."""
    full = ChebPoly.interpolate(f, sample_degree).coeffs
    out = []
    for m in degrees:
        k = np.arange(m + 1)
        theta = np.pi / (m + 2)
        damp = ((m + 2 - k) * np.cos(k * theta) + np.sin(k * theta) / np.tan(theta)) / (m + 2)
        c = full[: m + 1] * damp
        out.append(ChebPoly(c))
    return out


def k_functional(f: Callable, r: int, t: float, p: float, w: Weight | None, n: int,
                 cfg: QuadratureConfig = DEFAULT_CFG, candidates: Sequence[ChebPoly] = ()) -> float:
    """Upper bound for inf_g ||f - g||_{p,w_n} + t^r ||phi^r g^{(r)}||_{p,w_n}.

    The infimum is taken over the supplied ``candidates`` (typically the
    realization minimizers; computed at degree n when none are given),
    and damped Chebyshev truncations of f at degrees n/2 through 8n.

    Raises:
        UnsupportedExponentError: for 0 < p < 1, where the functional is
            identically zero; use `realization` instead.
    """
    p = float(p)
    if p < 1.0:
        raise UnsupportedExponentError(
            "the K-functional vanishes identically for 0 < p < 1; use realization() instead")
    ev = None if w is None else wn_evaluator(w, n)
    fine = NormRule.for_problem(f, ev, n=n, fine=True)
    pool = list(candidates)
    degrees = [] if candidates else [n]
    for m in degrees:
        for variant in ("phi", "phi_n"):
            pool.append(_realization_for_k(f, n, m, r, t, p, w, variant))
    pool.extend(_damped_truncations(f, [max(r, n // 2), n, 2 * n, 4 * n, 8 * n]))
    vals = [realization_objective(P, f, r, t, p, fine, "phi", n) for P in pool]
    return float(min(vals))


def _realization_for_k(f, n, m, r, t, p, w, variant):
    """Realization minimizer of degree m - 1 measured with w_n (not w_m)."""
    ev = None if w is None else wn_evaluator(w, n)
    coarse = NormRule.for_problem(f, ev, n=m)
    ph = _phi_variant(variant, n)(coarse.nodes)
    s = np.sqrt(coarse.quad)
    V = cheb.chebvander(coarse.nodes, m - 1)
    start = _lstsq(s[:, None] * V, s * _values(f, coarse.nodes))
    return ChebPoly(_realization_candidates(f, m - 1, r, t, p, coarse, ph, start)[0])
