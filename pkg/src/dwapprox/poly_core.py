"""Chebyshev-basis polynomials and the quadrature engine.

Every norm, modulus and weight average in the package is reduced to the
routines here: `ChebPoly` for polynomials of (possibly) very high degree,
`integrate` for adaptive composite Gauss-Legendre integration with graded
panels toward integrable power singularities, and `lp_norm` for weighted
L^p quasinorms including the sup-norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.fft import dct
from scipy.special import roots_jacobi

__all__ = [
    "ChebPoly",
    "QuadratureConfig",
    "DEFAULT_CFG",
    "DomainError",
    "ParameterError",
    "QuadratureError",
    "integrate",
    "lp_norm",
    "sup_norm",
    "jacobi_panels",
    "sign_change_roots",
    "cheb_grid",
]


class DomainError(ValueError):
    """Raised when a polynomial is evaluated outside [-1, 1]."""


class ParameterError(ValueError):
    """Raised for invalid exponents, orders or sizes."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its tolerance.

    Attributes:
        estimate: best available value of the integral.
        error: estimated absolute error of that value.
    """

    def __init__(self, estimate: float, error: float, message: str = ""):
        self.estimate = estimate
        self.error = error
        super().__init__(
            message or f"quadrature did not converge: estimate={estimate!r}, error={error!r}"
        )


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and panel layout shared by all integrals.

    Attributes:
        rel_tol: target relative accuracy of `integrate`.
        base_panels: uniform panels per smooth subinterval before refinement.
        grading_ratio: geometric ratio of panel widths toward a singularity.
        max_depth: number of adaptive refinement rounds before giving up.
        order: Gauss-Legendre points per panel.
        sup_points: Chebyshev-spaced points in the sup-norm search grid.
        sup_graded: graded points added near each endpoint and singularity.
        max_panels: hard cap on the number of live panels.
    """

    rel_tol: float = 1e-10
    base_panels: int = 32
    grading_ratio: float = 2.0
    max_depth: int = 60
    order: int = 16
    sup_points: int = 4096
    sup_graded: int = 64
    max_panels: int = 200_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ParameterError("rel_tol must be positive")
        if self.base_panels < 2:
            raise ParameterError("base_panels must be at least 2")
        if not self.grading_ratio > 1:
            raise ParameterError("grading_ratio must exceed 1")
        if self.max_depth < 1 or self.order < 2:
            raise ParameterError("max_depth and order must be positive")

    def with_(self, **changes) -> "QuadratureConfig":
        fields = dict(self.__dict__)
        fields.update(changes)
        return QuadratureConfig(**fields)


DEFAULT_CFG = QuadratureConfig()


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


class ChebPoly:
    """A polynomial stored by its Chebyshev coefficients on [-1, 1].

    Evaluation uses Clenshaw's recurrence (numpy's `chebval`), which is
    backward stable and works for complex arguments too.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[float]):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float)).copy()
        if c.ndim != 1:
            raise ParameterError("coefficients must be one-dimensional")
        if c.size == 0:
            c = np.zeros(1)
        c.setflags(write=False)
        self.coeffs = c

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zero(cls) -> "ChebPoly":
        return cls([0.0])

    @classmethod
    def constant(cls, value: float) -> "ChebPoly":
        return cls([value])

    @classmethod
    def from_power(cls, power_coeffs: Sequence[float]) -> "ChebPoly":
        """Build from monomial coefficients (lowest power first)."""
        return cls(cheb.poly2cheb(np.asarray(power_coeffs, dtype=float)))

    @classmethod
    def interpolate(cls, f: Callable, degree: int, interval=(-1.0, 1.0)) -> "ChebPoly":
        """Interpolate ``f`` at Chebyshev points of the first kind.

        When ``interval`` is not [-1, 1] the interpolant of ``f`` on that
        interval is still returned in the global [-1, 1] variable.
        """
        a, b = interval
        k = np.arange(degree + 1)
        t = np.cos(np.pi * (k + 0.5) / (degree + 1))
        x = 0.5 * (a + b) + 0.5 * (b - a) * t
        if (a, b) == (-1.0, 1.0):
            values = np.asarray(f(x), dtype=float) * np.ones(degree + 1)
            coeffs = dct(values, type=2) / (degree + 1)
            coeffs[0] *= 0.5
            return cls(coeffs)
        # low degrees only: a direct fit in the global variable is fine
        return cls(cheb.chebfit(x, np.asarray(f(x), dtype=float), degree))

    def __call__(self, x, check: bool = True):
        xa = np.asarray(x)
        if check and not np.iscomplexobj(xa):
            if xa.size and np.max(np.abs(xa)) > 1.0 + 1e-12:
                raise DomainError("evaluation point outside [-1, 1]")
        return cheb.chebval(xa, self.coeffs)

    def derivative(self, order: int = 1) -> "ChebPoly":
        if order < 0:
            raise ParameterError("derivative order must be nonnegative")
        c = self.coeffs
        for _ in range(order):
            if c.size <= 1:
                return ChebPoly.zero()
            c = cheb.chebder(c)
        return ChebPoly(c)

    def antiderivative(self, lbnd: float = -1.0) -> "ChebPoly":
        """Antiderivative vanishing at ``lbnd``."""
        return ChebPoly(cheb.chebint(self.coeffs, lbnd=lbnd))

    def trim(self, tol: float = 0.0) -> "ChebPoly":
        c = self.coeffs
        nz = np.nonzero(np.abs(c) > tol)[0]
        if nz.size == 0:
            return ChebPoly.zero()
        return ChebPoly(c[: nz[-1] + 1])

    def roots(self) -> np.ndarray:
        """Real roots in [-1, 1]."""
        c = self.trim().coeffs
        if c.size <= 1:
            return np.empty(0)
        r = cheb.chebroots(c)
        real = r[np.abs(r.imag) < 1e-9].real
        return np.sort(real[(real >= -1.0) & (real <= 1.0)])

    def _binary(self, other, op):
        if isinstance(other, ChebPoly):
            o = other.coeffs
        else:
            o = np.array([float(other)])
        return ChebPoly(op(self.coeffs, o))

    def __add__(self, other):
        return self._binary(other, cheb.chebadd)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, cheb.chebsub)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ChebPoly(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, ChebPoly):
            return ChebPoly(cheb.chebmul(self.coeffs, other.coeffs))
        return ChebPoly(self.coeffs * float(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return ChebPoly(self.coeffs / float(scalar))

    def __repr__(self):
        return f"ChebPoly(degree={self.degree})"


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


@lru_cache(maxsize=256)
def _jacobi_rule(order: int, left_power: float, right_power: float):
    """Gauss-Jacobi rule for the weight (1+t)^left_power (1-t)^right_power."""
    return roots_jacobi(order, right_power, left_power)


def jacobi_panels(f: Callable, lo, hi, left_power=0.0, right_power=0.0, order: int = 16):
    """Integrate ``f`` over many panels with endpoint power behaviour.

    The integrand is assumed to be |x-lo|^left_power |hi-x|^right_power
    times a smooth factor on each panel. The smooth factor is recovered at
    the rounded nodes using exactly computed distances to the panel ends, so
    panels hugging a singularity near x = +-1 keep full relative accuracy.

    Args:
        f: vectorized integrand.
        lo, hi: arrays of panel endpoints.
        left_power, right_power: scalars or arrays, each > -1.
        order: nodes per panel.

    Returns:
        Array of panel integrals.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    lp = np.broadcast_to(np.asarray(left_power, dtype=float), lo.shape)
    rp = np.broadcast_to(np.asarray(right_power, dtype=float), lo.shape)
    out = np.zeros(lo.shape)
    if lo.size == 0:
        return out
    keys = np.stack([lp, rp], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = np.asarray(inv).reshape(-1)
    for k, (a_pow, b_pow) in enumerate(uniq):
        sel = np.nonzero(inv == k)[0]
        half = 0.5 * (hi[sel] - lo[sel])
        if a_pow == 0.0 and b_pow == 0.0:
            out[sel] = _gl_panels(f, lo[sel], hi[sel], order)
            continue
        t, w = _jacobi_rule(order, float(a_pow), float(b_pow))
        x = lo[sel, None] + half[:, None] * (t[None, :] + 1.0)
        vals = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
        corr = np.ones(x.shape)
        if a_pow != 0.0:
            corr *= (half[:, None] * (1.0 + t[None, :]) / (x - lo[sel, None])) ** a_pow
        if b_pow != 0.0:
            corr *= (half[:, None] * (1.0 - t[None, :]) / (hi[sel, None] - x)) ** b_pow
        g = vals * corr / ((1.0 + t) ** a_pow * (1.0 - t) ** b_pow)
        out[sel] = half * (g @ w)
    return out


def _gl_panels(f, lo, hi, order):
    t, w = _legendre(order)
    half = 0.5 * (hi - lo)
    x = lo[:, None] + half[:, None] * (t[None, :] + 1.0)
    vals = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    return half * (vals @ w)


def _split_singularities(singularities):
    """Normalize singularity declarations to (location, exponent-or-None)."""
    out = []
    for s in singularities:
        if isinstance(s, (tuple, list)):
            out.append((float(s[0]), float(s[1])))
        else:
            out.append((float(s), None))
    return out


def _estimate_exponent(f, c, toward, span):
    """Exponent alpha of a |x-c|^{-alpha} blow-up, from three samples.

    Fits log f = a - alpha log d + beta d at offsets d spaced by decades, so
    a smooth factor multiplying the power does not bias alpha to first order.
    """
    x = c + toward * span * np.array([1e-6, 1e-7, 1e-8])
    d = np.abs(x - c)  # exact offsets of the rounded sample points
    with np.errstate(all="ignore"):
        v = np.abs(np.asarray(f(x), dtype=float))
    if not np.all(np.isfinite(v)) or np.any(v == 0.0):
        return 0.0
    mat = np.column_stack([np.ones(3), -np.log(d), d])
    alpha = float(np.linalg.solve(mat, np.log(v))[1])
    return float(min(max(alpha, -0.9), 0.999))


def _panel_values(f, lo, hi, lp, rp, order):
    plain = (lp == 0.0) & (rp == 0.0)
    out = np.empty(lo.shape)
    if np.all(plain):
        return _gl_panels(f, lo, hi, order)
    if np.any(plain):
        out[plain] = _gl_panels(f, lo[plain], hi[plain], order)
    sp = ~plain
    out[sp] = jacobi_panels(f, lo[sp], hi[sp], lp[sp], rp[sp], order)
    return out


def integrate(
    f: Callable,
    a: float,
    b: float,
    singularities: Sequence = (),
    cfg: QuadratureConfig = DEFAULT_CFG,
    breakpoints: Sequence[float] = (),
    return_error: bool = False,
):
    """Adaptive composite Gauss quadrature of ``f`` over [a, b].

    Each smooth piece starts with ``base_panels`` uniform panels. The panel
    touching a declared singularity is replaced by geometrically graded
    panels, and the innermost one uses a Gauss-Jacobi rule matched to the
    power behaviour |x-c|^{-alpha}. Panels are then bisected wherever halving
    changes their value, until the summed error estimate is below
    ``rel_tol`` times the integral. ``f`` is never sampled at a panel end.

    Args:
        f: vectorized integrand.
        a, b: integration limits.
        singularities: points c, or pairs (c, alpha), where ``f`` may blow up
            like |x-c|^{-alpha} with alpha < 1. A bare point gets its
            exponent estimated from two samples near it.
        cfg: quadrature configuration.
        breakpoints: points where ``f`` is merely nonsmooth.
        return_error: also return the estimated absolute error.

    Raises:
        QuadratureError: when the tolerance is not met within max_depth rounds.
    """
    a = float(a)
    b = float(b)
    if a == b:
        return (0.0, 0.0) if return_error else 0.0
    if a > b:
        res = integrate(f, b, a, singularities, cfg, breakpoints, True)
        return (-res[0], res[1]) if return_error else -res[0]

    sing = {}
    for c, alpha in _split_singularities(singularities):
        if a <= c <= b:
            sing[c] = alpha
    cuts = sorted({a, b, *sing, *(float(p) for p in breakpoints if a < p < b)})
    order = cfg.order
    ratio = cfg.grading_ratio
    levels = max(4, int(math.ceil(12.0 / math.log2(ratio))))

    lo_l, hi_l, lp_l, rp_l = [], [], [], []
    for s0, s1 in zip(cuts[:-1], cuts[1:]):
        edges = np.linspace(s0, s1, cfg.base_panels + 1)
        inner = edges
        if s0 in sing:
            alpha = sing[s0]
            if alpha is None:
                alpha = _estimate_exponent(f, s0, 1.0, s1 - s0)
            g = s0 + (edges[1] - s0) * ratio ** (-np.arange(levels + 1.0))
            g = g[::-1]  # ascending: innermost first
            lo_l.append(np.array([s0]))
            hi_l.append(g[:1])
            lp_l.append(np.array([-alpha]))
            rp_l.append(np.zeros(1))
            lo_l.append(g[:-1])
            hi_l.append(g[1:])
            lp_l.append(np.zeros(levels))
            rp_l.append(np.zeros(levels))
            inner = inner[1:]
        if s1 in sing:
            alpha = sing[s1]
            if alpha is None:
                alpha = _estimate_exponent(f, s1, -1.0, s1 - s0)
            g = s1 - (s1 - edges[-2]) * ratio ** (-np.arange(levels + 1.0))
            lo_l.append(g[:-1])
            hi_l.append(g[1:])
            lp_l.append(np.zeros(levels))
            rp_l.append(np.zeros(levels))
            lo_l.append(g[-1:])
            hi_l.append(np.array([s1]))
            lp_l.append(np.zeros(1))
            rp_l.append(np.array([-alpha]))
            inner = inner[:-1]
        if inner.size > 1:
            lo_l.append(inner[:-1])
            hi_l.append(inner[1:])
            lp_l.append(np.zeros(inner.size - 1))
            rp_l.append(np.zeros(inner.size - 1))
    lo = np.concatenate(lo_l)
    hi = np.concatenate(hi_l)
    lp = np.concatenate(lp_l)
    rp = np.concatenate(rp_l)

    whole = _panel_values(f, lo, hi, lp, rp, order)
    done_total = 0.0
    done_err = 0.0
    converged = False
    total, err_total = float(np.sum(whole)), np.inf
    for _depth in range(cfg.max_depth):
        mid = 0.5 * (lo + hi)
        zeros = np.zeros(lo.shape)
        halves = _panel_values(
            f,
            np.concatenate([lo, mid]),
            np.concatenate([mid, hi]),
            np.concatenate([lp, zeros]),
            np.concatenate([zeros, rp]),
            order,
        )
        left, right = halves[: lo.size], halves[lo.size :]
        refined = left + right
        err = np.abs(whole - refined)
        total = done_total + float(np.sum(refined))
        scale = abs(done_total) + float(np.sum(np.abs(refined)))
        err_total = done_err + float(np.sum(err))
        # cancelling integrands are judged against the integral of |f|
        tol = cfg.rel_tol * max(abs(total), 1e-6 * scale, 1e-300)
        if err_total <= tol:
            converged = True
            break
        if not np.isfinite(err_total):
            break
        # panels already accurate relative to their share are retired
        share = tol * (hi - lo) / (b - a)
        retire = err <= 0.25 * share
        done_total += float(np.sum(refined[retire]))
        done_err += float(np.sum(err[retire]))
        keep = ~retire
        if np.count_nonzero(keep) * 2 > cfg.max_panels:
            break
        mid_k = mid[keep]
        nk = mid_k.size
        lo, hi = np.concatenate([lo[keep], mid_k]), np.concatenate([mid_k, hi[keep]])
        lp, rp = np.concatenate([lp[keep], np.zeros(nk)]), np.concatenate([np.zeros(nk), rp[keep]])
        whole = np.concatenate([left[keep], right[keep]])
    if not converged:
        raise QuadratureError(total, err_total)
    return (total, err_total) if return_error else total


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


def cheb_grid(size: int, a: float = -1.0, b: float = 1.0) -> np.ndarray:
    """Chebyshev-spaced points (extrema, endpoints included), ascending."""
    t = -np.cos(np.pi * np.arange(size) / (size - 1))
    return 0.5 * (a + b) + 0.5 * (b - a) * t


def _sup_grid(a, b, singularities, cfg):
    pts = [cheb_grid(cfg.sup_points, a, b)]
    k = np.arange(1, cfg.sup_graded + 1)
    span = b - a
    for c in (a, b, *singularities):
        if not a <= c <= b:
            continue
        offs = span * 0.5 ** (k * 40.0 / cfg.sup_graded)
        pts.append(c + offs)
        pts.append(c - offs)
    g = np.concatenate(pts)
    g = g[(g >= a) & (g <= b)]
    sing = np.asarray(list(singularities), dtype=float)
    if sing.size:
        g = g[np.min(np.abs(g[:, None] - sing[None, :]), axis=1) > 0]
    return np.unique(g)


def sup_norm(g: Callable, a: float = -1.0, b: float = 1.0, singularities=(), cfg=DEFAULT_CFG,
             return_argmax: bool = False):
    """Maximum of |g| on a refinable grid over [a, b].

    The grid is refined around the current maximizer until the maximum is
    stable to ``rel_tol``.
    """
    x = _sup_grid(a, b, singularities, cfg)
    v = np.abs(np.asarray(g(x), dtype=float))
    j = int(np.argmax(v))
    best, arg = float(v[j]), float(x[j])
    lo = x[max(j - 1, 0)]
    hi = x[min(j + 1, x.size - 1)]
    for _ in range(40):
        xs = np.linspace(lo, hi, 65)
        if singularities:
            xs = xs[np.min(np.abs(xs[:, None] - np.asarray(singularities)[None, :]), axis=1) > 0]
        if xs.size == 0:
            break
        vs = np.abs(np.asarray(g(xs), dtype=float))
        k = int(np.argmax(vs))
        new = float(vs[k])
        step = (hi - lo) / 64
        lo, hi = max(xs[k] - step, a), min(xs[k] + step, b)
        if new > best:
            improved = new - best
            best, arg = new, float(xs[k])
            if improved <= cfg.rel_tol * best:
                break
        elif hi - lo < 1e-15 * max(1.0, abs(arg)):
            break
        else:
            if step < 1e-14:
                break
    return (best, arg) if return_argmax else best


def sign_change_roots(g: Callable, grid: np.ndarray, iterations: int = 60) -> np.ndarray:
    """Roots of a continuous ``g`` bracketed by sign changes on ``grid``."""
    v = np.asarray(g(grid), dtype=float)
    s = np.sign(v)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    exact = grid[s == 0]
    lo, hi = grid[idx].copy(), grid[idx + 1].copy()
    flo = v[idx].copy()
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fm = np.asarray(g(mid), dtype=float)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
        if lo.size == 0 or np.max(hi - lo) < 1e-16:
            break
    return np.sort(np.concatenate([exact, 0.5 * (lo + hi)]))


def lp_norm(
    f: Callable,
    p: float,
    weight: Callable | None = None,
    interval=(-1.0, 1.0),
    singularities: Sequence[float] = (),
    cfg: QuadratureConfig = DEFAULT_CFG,
    breakpoints: Sequence[float] = (),
    method: str = "adaptive",
    grid_size: int = 2048,
):
    """Weighted L^p quasinorm (sum |f|^p w)^(1/p), or sup |f| w for p = inf.

    Args:
        f: vectorized function.
        p: exponent in (0, inf].
        weight: vectorized weight, or None for w = 1.
        interval: integration interval.
        singularities: declared singular points of f or w.
        cfg: quadrature configuration.
        breakpoints: kinks of f or w (help the adaptive rule).
        method: ``"adaptive"`` uses `integrate`; ``"zeros"`` assumes f is
            smooth, locates its sign changes on a Chebyshev grid of
            ``grid_size`` points and integrates with Gauss-Jacobi panels
            that absorb the |f|^p cusps at those zeros.
    """
    p = float(p)
    if not p > 0:
        raise ParameterError(f"exponent p must be positive, got {p}")
    a, b = map(float, interval)
    if weight is None:
        integrand_w = lambda x: np.abs(np.asarray(f(x), dtype=float))
    else:
        integrand_w = lambda x: np.abs(np.asarray(f(x), dtype=float)) * np.asarray(weight(x), dtype=float)
    if math.isinf(p):
        return sup_norm(integrand_w, a, b, singularities, cfg)
    if weight is None:
        integrand = lambda x: np.abs(np.asarray(f(x), dtype=float)) ** p
    else:
        integrand = lambda x: np.abs(np.asarray(f(x), dtype=float)) ** p * np.asarray(weight(x), dtype=float)
    if method == "zeros":
        val = _zero_aware_integral(f, integrand, p, a, b, breakpoints, grid_size, cfg.order)
    elif method == "adaptive":
        val = integrate(integrand, a, b, singularities, cfg, breakpoints)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return max(val, 0.0) ** (1.0 / p)


def _zero_aware_integral(f, integrand, p, a, b, breakpoints, grid_size, order):
    grid = cheb_grid(grid_size, a, b)
    roots = sign_change_roots(f, grid)
    bp = np.asarray([x for x in breakpoints if a < x < b], dtype=float)
    edges = np.unique(np.concatenate([grid, roots, bp]))
    # drop slivers that would make panels degenerate
    keep = np.concatenate([[True], np.diff(edges) > 1e-15 * (b - a)])
    edges = edges[keep]
    lo, hi = edges[:-1], edges[1:]
    if roots.size:
        near_lo = np.min(np.abs(lo[:, None] - roots[None, :]), axis=1) <= 1e-15 * (b - a)
        near_hi = np.min(np.abs(hi[:, None] - roots[None, :]), axis=1) <= 1e-15 * (b - a)
    else:
        near_lo = near_hi = np.zeros(lo.shape, dtype=bool)
    lp = np.where(near_lo, p, 0.0)
    rp = np.where(near_hi, p, 0.0)
    return float(np.sum(jacobi_panels(integrand, lo, hi, lp, rp, order)))
