"""Weights on [-1, 1], their window averages w_n, and doubling diagnostics.

A `Weight` carries its pointwise evaluator, the location and exponent of
each power-type singularity, and (when available) a closed-form
antiderivative. Masses w(I) fall back to a Gauss-Jacobi scheme anchored at
the singularities, so w_n(x) = delta_n(x)^{-1} w([x - delta_n, x + delta_n])
is computed to near machine precision for every catalog weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import betainc, betaln

from .poly_core import DEFAULT_CFG, ParameterError, QuadratureConfig, cheb_grid, sign_change_roots

__all__ = [
    "Weight",
    "WnEvaluator",
    "ClassReport",
    "DegenerateWeightError",
    "phi",
    "delta_n",
    "delta_max",
    "w_n",
    "sweep_grid",
    "constant",
    "jacobi",
    "power_singularity",
    "product",
    "piecewise_scaled",
    "flat_exponential",
    "builtin_weights",
    "weight_from_spec",
    "estimate_doubling_constant",
    "estimate_growth_exponents",
    "verify_growth_exponents",
    "check_crucial_inequality",
    "class_membership",
    "check_a_star",
]


class DegenerateWeightError(ValueError):
    """A sampled interval carries zero weight."""


def phi(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.maximum(1.0 - x * x, 0.0))


def delta_n(n, x):
    """Window half-width sqrt(1-x^2)/n + 1/n^2."""
    return phi(x) / n + 1.0 / (n * n)


def delta_max(k, x):
    """max(sqrt(1-x^2)/k, 1/k^2)."""
    return np.maximum(phi(x) / k, 1.0 / (k * k))


# ---------------------------------------------------------------------------
# Mass computation
# ---------------------------------------------------------------------------

_GJ_ORDER = 24
_GRADED_LEVELS = 6


def _gauss_legendre(order):
    return np.polynomial.legendre.leggauss(order)


class _AnchoredMass:
    """Masses of a weight with power singularities at known anchors.

    Anchors are -1, 1 and the singular points. Inside each anchor segment an
    integral from an anchor uses geometric panels toward the anchor with a
    Gauss-Jacobi rule on the innermost one; short windows far from every
    anchor use plain Gauss-Legendre.
    """

    def __init__(self, evaluator, anchors: dict[float, float]):
        self.evaluator = evaluator
        pts = sorted({-1.0, 1.0, *anchors})
        self.anchors = np.array(pts)
        self.powers = np.array([-anchors.get(a, 0.0) for a in pts])
        self.t_gl, self.w_gl = _gauss_legendre(_GJ_ORDER)
        from scipy.special import roots_jacobi

        self._jac = {}
        for pw in set(self.powers.tolist()):
            self._jac[pw] = roots_jacobi(_GJ_ORDER, 0.0, pw)  # weight (1+t)^pw
        seg = []
        for j in range(len(pts) - 1):
            a, b = pts[j], pts[j + 1]
            mid = 0.5 * (a + b)
            seg.append(
                self._from_anchor(np.array([mid]), j, left=True)[0]
                + self._from_anchor(np.array([mid]), j + 1, left=False)[0]
            )
        self.segment_mass = np.array(seg)
        self.prefix = np.concatenate([[0.0], np.cumsum(seg)])

    def _eval(self, x):
        with np.errstate(all="ignore"):
            return np.asarray(self.evaluator(x), dtype=float)

    def _from_anchor(self, x, j, left):
        """Integral between anchor j and each x (x on the segment side)."""
        c = self.anchors[j]
        pw = self.powers[j]
        x = np.asarray(x, dtype=float)
        dist = np.abs(x - c)
        sgn = 1.0 if left else -1.0
        out = np.zeros(x.shape)
        ok = dist > 0
        if not np.any(ok):
            return out
        d = dist[ok]
        # graded levels [d r^{-k-1}, d r^{-k}] in distance, innermost Jacobi
        for k in range(_GRADED_LEVELS):
            hi = d * 2.0 ** (-k)
            lo = d * 2.0 ** (-k - 1)
            half = 0.5 * (hi - lo)
            s = lo[:, None] + half[:, None] * (self.t_gl[None, :] + 1.0)
            v = self._corrected(c, sgn, s, pw)
            out[ok] += half * (v @ self.w_gl)
        inner = d * 2.0 ** (-_GRADED_LEVELS)
        t, w = self._jac[pw]
        half = 0.5 * inner
        s = half[:, None] * (t[None, :] + 1.0)
        v = self._corrected(c, sgn, s, pw)
        if pw != 0.0:
            v = v / (1.0 + t[None, :]) ** pw
        out[ok] += half * (v @ w)
        return out

    def _corrected(self, c, sgn, s, pw):
        """Weight at c + sgn*s, rescaled from the represented offset to s."""
        xs = c + sgn * s
        v = self._eval(xs)
        if pw == 0.0:
            return v
        exact = np.abs(xs - c)  # offsets as actually represented
        # nodes that rounded onto the anchor itself carry no usable value
        bad = exact == 0.0
        exact = np.where(bad, 1.0, exact)
        return np.where(bad, 0.0, v * (s / exact) ** pw)

    def _grouped(self, x, j, left):
        """_from_anchor for per-point anchor indices ``j``."""
        out = np.zeros(x.shape)
        for jj in np.unique(j):
            sel = j == jj
            out[sel] = self._from_anchor(x[sel], int(jj), left)
        return out

    def _left_part(self, x, j):
        """Integral from anchor j to x, for x in segment j."""
        near = (x - self.anchors[j]) <= (self.anchors[j + 1] - x)
        out = np.empty(x.shape)
        if np.any(near):
            out[near] = self._grouped(x[near], j[near], True)
        far = ~near
        if np.any(far):
            out[far] = self.segment_mass[j[far]] - self._grouped(x[far], j[far] + 1, False)
        return out

    def _right_part(self, x, j):
        """Integral from x to anchor j+1, for x in segment j."""
        near = (self.anchors[j + 1] - x) <= (x - self.anchors[j])
        out = np.empty(x.shape)
        if np.any(near):
            out[near] = self._grouped(x[near], j[near] + 1, False)
        far = ~near
        if np.any(far):
            out[far] = self.segment_mass[j[far]] - self._grouped(x[far], j[far], True)
        return out

    def _direct(self, a, b):
        half = 0.5 * (b - a)
        x = a[:, None] + half[:, None] * (self.t_gl[None, :] + 1.0)
        return half * (self._eval(x) @ self.w_gl)

    def mass(self, a, b):
        a = np.clip(np.asarray(a, dtype=float), -1.0, 1.0)
        b = np.clip(np.asarray(b, dtype=float), -1.0, 1.0)
        a, b = np.broadcast_arrays(a, b)
        shape = a.shape
        a = a.ravel()
        b = b.ravel()
        out = np.zeros(a.shape)
        last = len(self.anchors) - 2
        ja = np.clip(np.searchsorted(self.anchors, a, side="right") - 1, 0, last)
        jb = np.clip(np.searchsorted(self.anchors, b, side="left") - 1, 0, last)
        live = b > a
        same = live & (ja == jb)
        if np.any(same):
            lo, hi, j = a[same], b[same], ja[same]
            width = hi - lo
            left_gap = lo - self.anchors[j]
            right_gap = self.anchors[j + 1] - hi
            res = np.empty(lo.shape)
            # short windows away from both anchors: plain rule, no cancellation
            direct = (left_gap >= width) & (right_gap >= width)
            both_left = ~direct & (right_gap > width) & (left_gap <= right_gap)
            both_right = ~direct & (left_gap > width) & ~(left_gap <= right_gap)
            spans = ~(direct | both_left | both_right)
            if np.any(direct):
                res[direct] = self._direct(lo[direct], hi[direct])
            if np.any(both_left):
                jj = j[both_left]
                res[both_left] = self._grouped(hi[both_left], jj, True) - self._grouped(lo[both_left], jj, True)
            if np.any(both_right):
                jj = j[both_right] + 1
                res[both_right] = self._grouped(lo[both_right], jj, False) - self._grouped(hi[both_right], jj, False)
            if np.any(spans):
                jj = j[spans]
                res[spans] = (
                    self.segment_mass[jj]
                    - self._left_part(lo[spans], jj)
                    - self._right_part(hi[spans], jj)
                )
            out[same] = res
        multi = live & (ja != jb)
        if np.any(multi):
            j0, j1 = ja[multi], jb[multi]
            out[multi] = (
                self._right_part(a[multi], j0)
                + (self.prefix[j1] - self.prefix[j0 + 1])
                + self._left_part(b[multi], j1)
            )
        return out.reshape(shape)


# ---------------------------------------------------------------------------
# Weight
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Weight:
    """A nonnegative integrable weight on [-1, 1], zero outside.

    Attributes:
        evaluator: vectorized u -> w(u) for u in [-1, 1].
        singularities: pairs (c, alpha) meaning w ~ |u - c|^{-alpha} near c.
            Negative alpha marks a power-type zero, which the mass
            quadrature also exploits.
        label: human-readable name.
        spec: JSON-serializable description (kind and params).
        mass_fn: optional closed-form mass (a, b) -> w([a, b]) for a <= b
            inside [-1, 1].
        breakpoints: jump locations of piecewise weights.
    """

    evaluator: Callable
    singularities: tuple = ()
    label: str = "weight"
    spec: dict = field(default_factory=dict)
    mass_fn: Callable | None = None
    breakpoints: tuple = ()

    def __post_init__(self):
        if self.mass_fn is None:
            anchors = {float(p): 0.0 for p in self.breakpoints}
            anchors.update({float(c): float(a) for c, a in self.singularities})
            object.__setattr__(self, "_anchored", _AnchoredMass(self.evaluator, anchors))
        else:
            object.__setattr__(self, "_anchored", None)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= -1.0) & (x <= 1.0)
        with np.errstate(all="ignore"):
            v = np.asarray(self.evaluator(np.where(inside, x, 0.0)), dtype=float)
        v = np.where(inside, v, 0.0)
        for c, alpha in self.singularities:
            if alpha > 0:
                v = np.where(inside & (x == c), np.inf, v)
        return v

    @property
    def singular_points(self) -> tuple:
        return tuple(float(c) for c, a in self.singularities if a > 0)

    def mass(self, a, b):
        """w([a, b]) with w = 0 outside [-1, 1]; vectorized."""
        a = np.clip(np.asarray(a, dtype=float), -1.0, 1.0)
        b = np.clip(np.asarray(b, dtype=float), -1.0, 1.0)
        a, b = np.broadcast_arrays(a, b)
        if self.mass_fn is not None:
            out = np.where(b > a, self.mass_fn(a, np.maximum(a, b)), 0.0)
            return np.maximum(out, 0.0)
        return np.maximum(self._anchored.mass(a, b), 0.0)

    def average(self, n, x):
        """w_n(x) for one n, vectorized in x."""
        x = np.asarray(x, dtype=float)
        d = delta_n(n, x)
        return self.mass(x - d, x + d) / d

    def to_spec(self) -> dict:
        return dict(self.spec)


def _check_exponent(name, value, upper):
    if not value < upper:
        raise ParameterError(f"{name}={value} is outside the integrability range")


def constant(value: float = 1.0) -> Weight:
    if not value > 0:
        raise ParameterError("constant weight must be positive")
    value = float(value)
    return Weight(
        evaluator=lambda u: np.full(np.shape(u), value),
        label=f"constant({value:g})",
        spec={"kind": "constant", "params": {"value": value}},
        mass_fn=lambda a, b: value * (b - a),
    )


def jacobi(a: float, b: float) -> Weight:
    """(1-u)^a (1+u)^b with a, b > -1."""
    a = float(a)
    b = float(b)
    _check_exponent("-a", -a, 1.0)
    _check_exponent("-b", -b, 1.0)
    if a == 0.0 and b == 0.0:
        return constant(1.0)
    log_total = (a + b + 1.0) * math.log(2.0) + betaln(a + 1.0, b + 1.0)
    total = math.exp(log_total)

    def left_cum(x):  # integral from -1 to x
        return total * betainc(b + 1.0, a + 1.0, np.clip((1.0 + x) / 2.0, 0.0, 1.0))

    def right_cum(x):  # integral from x to 1
        return total * betainc(a + 1.0, b + 1.0, np.clip((1.0 - x) / 2.0, 0.0, 1.0))

    def mass_fn(lo, hi):
        right = lo >= 0.0
        return np.where(right, right_cum(lo) - right_cum(hi), left_cum(hi) - left_cum(lo))

    sing = []
    if a != 0.0:
        sing.append((1.0, -a))
    if b != 0.0:
        sing.append((-1.0, -b))
    return Weight(
        evaluator=lambda u: (1.0 - u) ** a * (1.0 + u) ** b,
        singularities=tuple(sing),
        label=f"(1-x)^{a:g}(1+x)^{b:g}",
        spec={"kind": "jacobi", "params": {"a": a, "b": b}},
        mass_fn=mass_fn,
    )


def power_singularity(c: float, alpha: float) -> Weight:
    """|u - c|^{-alpha} with alpha < 1 and c in [-1, 1]."""
    c = float(c)
    alpha = float(alpha)
    _check_exponent("alpha", alpha, 1.0)
    if not -1.0 <= c <= 1.0:
        raise ParameterError("singularity location must lie in [-1, 1]")
    beta = 1.0 - alpha

    def antider(x):
        d = x - c
        return np.sign(d) * np.abs(d) ** beta / beta

    return Weight(
        evaluator=lambda u: np.abs(u - c) ** (-alpha),
        singularities=((c, alpha),),
        label=f"|x-{c:g}|^-{alpha:g}" if c else f"|x|^-{alpha:g}",
        spec={"kind": "power_singularity", "params": {"c": c, "alpha": alpha}},
        mass_fn=lambda lo, hi: antider(hi) - antider(lo),
    )


def product(*factors: Weight) -> Weight:
    """Pointwise product; mass by the anchored Gauss-Jacobi scheme."""
    if not factors:
        raise ParameterError("product needs at least one factor")
    exps: dict[float, float] = {}
    for w in factors:
        for c, a in w.singularities:
            exps[c] = exps.get(c, 0.0) + a
    for c, a in exps.items():
        _check_exponent("combined exponent", a, 1.0)
    evals = [w.evaluator for w in factors]

    def evaluator(u):
        out = np.ones(np.shape(u))
        for e in evals:
            out = out * e(u)
        return out

    return Weight(
        evaluator=evaluator,
        singularities=tuple(sorted(exps.items())),
        label="*".join(w.label for w in factors),
        spec={"kind": "product", "params": {"factors": [w.to_spec() for w in factors]}},
        breakpoints=tuple(sorted({p for w in factors for p in w.breakpoints})),
    )


def piecewise_scaled(base: Weight, breakpoints: Sequence[float], scales: Sequence[float]) -> Weight:
    """``base`` multiplied by ``scales[k]`` on the k-th piece between breakpoints."""
    bps = np.asarray(sorted(float(p) for p in breakpoints))
    sc = np.asarray([float(s) for s in scales])
    if sc.size != bps.size + 1 or np.any(sc <= 0):
        raise ParameterError("need len(breakpoints)+1 positive scales")
    edges = np.concatenate([[-1.0], bps, [1.0]])

    def evaluator(u):
        k = np.searchsorted(bps, u, side="right")
        return sc[k] * base.evaluator(u)

    def mass_fn(lo, hi):
        out = np.zeros(np.shape(lo))
        for k in range(sc.size):
            a = np.clip(lo, edges[k], edges[k + 1])
            b = np.clip(hi, edges[k], edges[k + 1])
            out = out + sc[k] * np.where(b > a, base.mass(a, b), 0.0)
        return out

    return Weight(
        evaluator=evaluator,
        singularities=base.singularities,
        label=f"{base.label} scaled on {len(sc)} pieces",
        spec={
            "kind": "piecewise_scaled",
            "params": {"base": base.to_spec(), "breakpoints": bps.tolist(), "scales": sc.tolist()},
        },
        mass_fn=mass_fn,
        breakpoints=tuple(bps.tolist()),
    )


def flat_exponential() -> Weight:
    """exp(-1/(1-u^2)): integrable and positive but not doubling at +-1."""

    def evaluator(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(np.abs(u) < 1.0, np.exp(-1.0 / (1.0 - u * u)), 0.0)

    return Weight(evaluator=evaluator, label="exp(-1/(1-x^2))", spec={"kind": "flat_exponential", "params": {}})


def builtin_weights() -> dict[str, Weight]:
    """The doubling weights used across the test suites."""
    return {
        "constant": constant(1.0),
        "jacobi_right_half": jacobi(-0.5, 0.0),
        "jacobi_right_09": jacobi(-0.9, 0.0),
        "chebyshev_second": jacobi(0.5, 0.5),
        "jacobi_zero_right": jacobi(2.0, 0.0),
        "interior_half": power_singularity(0.0, 0.5),
        "interior_09": power_singularity(0.0, 0.9),
        "interior_and_right": product(power_singularity(0.0, 0.5), jacobi(-0.5, 0.0)),
        "step_tenth": piecewise_scaled(constant(1.0), [0.0], [1.0, 0.1]),
    }


def weight_from_spec(spec: dict) -> Weight:
    """Build a weight from ``{"kind": ..., "params": {...}}``."""
    kind = spec.get("kind")
    params = spec.get("params", {})
    if kind == "constant":
        return constant(params.get("value", 1.0))
    if kind == "jacobi":
        return jacobi(params.get("a", 0.0), params.get("b", 0.0))
    if kind == "power_singularity":
        return power_singularity(params.get("c", 0.0), params["alpha"])
    if kind == "product":
        return product(*(weight_from_spec(f) for f in params["factors"]))
    if kind == "piecewise_scaled":
        return piecewise_scaled(weight_from_spec(params["base"]), params["breakpoints"], params["scales"])
    if kind == "flat_exponential":
        return flat_exponential()
    if kind == "builtin":
        return builtin_weights()[params["name"]]
    raise ParameterError(f"unknown weight kind {kind!r}")


# ---------------------------------------------------------------------------
# w_n
# ---------------------------------------------------------------------------


def sweep_grid(n_values, weight: Weight | None = None, size: int = 1024) -> np.ndarray:
    """Chebyshev grid plus the endpoint and singularity scales of each n."""
    pts = [cheb_grid(size)]
    ks = np.array([0.0, 1.0, 2.0, 4.0])
    sing = weight.singular_points if weight is not None else ()
    for n in np.atleast_1d(n_values):
        n = float(n)
        edge = 1.0 - ks / n**2
        pts.append(edge)
        pts.append(-edge)
        for c in sing:
            d = float(delta_n(n, c))
            offs = d * 2.0 ** np.arange(-3, 5)
            pts.append(np.concatenate([[c], c + offs, c - offs]))
    g = np.concatenate(pts)
    return np.unique(g[(g >= -1.0) & (g <= 1.0)])


class WnEvaluator:
    """w_n for a fixed weight and n, with values cached on a sweep grid.

    The cache is filled at construction, after which the object is
    read-only.
    """

    #: angular resolution of the interpolation cache
    DENSE_SIZE = 1 << 15

    def __init__(self, weight: Weight, n: int, grid: np.ndarray | None = None):
        if n < 1:
            raise ParameterError("n must be positive")
        self.weight = weight
        self.n = int(n)
        self.grid = sweep_grid([n], weight) if grid is None else np.asarray(grid, dtype=float)
        self.values = weight.average(self.n, self.grid)
        self.grid.setflags(write=False)
        self.values.setflags(write=False)
        # dense cache: uniform in angle, plus geometric clusters at the kinks
        # where the window edge crosses a singularity, -1, 1 or a jump
        xs = [np.cos(np.linspace(0.0, np.pi, self.DENSE_SIZE))]
        offs = 1.5 ** -np.arange(0, 60)
        for k in self.kinks():
            d = 0.05 * float(delta_n(self.n, k))
            xs.append(k + d * offs)
            xs.append(k - d * offs)
            xs.append([k])
        x = np.unique(np.clip(np.concatenate(xs), -1.0, 1.0))
        self._dense_x = x
        self._log_dense = np.log(weight.average(self.n, x))

    def __call__(self, x):
        """Exact w_n (the window mass is recomputed)."""
        if x is self.grid:
            return self.values
        return self.weight.average(self.n, x)

    def interp(self, x):
        """w_n from the dense cache (log-linear); meant for inner loops."""
        x = np.asarray(x, dtype=float)
        return np.exp(np.interp(x, self._dense_x, self._log_dense))

    def kinks(self) -> np.ndarray:
        """Points where the window edge crosses -1, 1 or a singularity."""
        targets = [-1.0, 1.0, *self.weight.singular_points, *self.weight.breakpoints]
        grid = cheb_grid(4 * self.n + 64)
        out = []
        for s in targets:
            for sgn in (1.0, -1.0):
                g = lambda x, s=s, sgn=sgn: x + sgn * delta_n(self.n, x) - s
                out.append(sign_change_roots(g, grid))
        pts = np.concatenate(out) if out else np.empty(0)
        return np.unique(pts[(pts > -1.0) & (pts < 1.0)])


def w_n(weight: Weight, n: int, x, cfg: QuadratureConfig = DEFAULT_CFG):
    """delta_n(x)^{-1} times the weight of [x - delta_n(x), x + delta_n(x)]."""
    return weight.average(n, x)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def estimate_doubling_constant(weight: Weight, depth: int, cfg: QuadratureConfig = DEFAULT_CFG,
                               return_interval: bool = False):
    """Largest w(2I)/w(I) over dyadic intervals I = [c-h, c+h] inside [-1, 1].

    Centers lie on a uniform grid of spacing 2^{1-depth}; half-lengths are
    2^{-j} for 1 <= j <= depth. The doubled interval is clipped to [-1, 1].
    This is a lower bound for the doubling constant.
    """
    if depth < 1:
        raise ParameterError("depth must be at least 1")
    centers = np.linspace(-1.0, 1.0, 2**depth + 1)
    halves = 2.0 ** -np.arange(1, depth + 1)
    c, h = np.meshgrid(centers, halves, indexing="ij")
    c, h = c.ravel(), h.ravel()
    inside = (c - h >= -1.0) & (c + h <= 1.0)
    c, h = c[inside], h[inside]
    small = weight.mass(c - h, c + h)
    if np.any(small <= 0):
        k = int(np.argmin(small))
        raise DegenerateWeightError(f"w(I) = 0 for I = [{c[k] - h[k]}, {c[k] + h[k]}]")
    big = weight.mass(c - 2 * h, c + 2 * h)
    ratio = big / small
    k = int(np.argmax(ratio))
    val = float(ratio[k])
    if return_interval:
        return val, (float(c[k] - h[k]), float(c[k] + h[k]))
    return val


def _growth_samples(weight, n_list, grid, max_points=160):
    g = np.asarray(grid, dtype=float)
    if g.size > max_points:
        g = g[np.unique(np.linspace(0, g.size - 1, max_points).round().astype(int))]
    lr_all, lb_all = [], []
    for n in n_list:
        v = np.log(weight.average(n, g))
        lr = np.abs(v[:, None] - v[None, :])
        ph = phi(g)
        br = 1.0 + n * np.abs(g[:, None] - g[None, :]) + n * np.abs(ph[:, None] - ph[None, :])
        lr_all.append(lr.ravel())
        lb_all.append(np.log(br).ravel())
    return np.concatenate(lr_all), np.concatenate(lb_all)


def estimate_growth_exponents(weight: Weight, n_list, grid=None, cfg: QuadratureConfig = DEFAULT_CFG):
    """Fit (K, s) with w_n(x) <= K (1 + n|x-y| + n|phi(x)-phi(y)|)^s w_n(y).

    The log-ratio |log w_n(x) - log w_n(y)| is binned against the log of the
    bracket; s is the least-squares slope of the per-bin maxima over the
    upper two thirds of the bracket range (clipped at 0), and K is then the
    smallest constant making every sampled triple hold.
    """
    n_list = list(n_list)
    if not n_list:
        raise ParameterError("n_list must be nonempty")
    if grid is None:
        grid = sweep_grid(n_list, weight, size=256)
    lr, lb = _growth_samples(weight, n_list, grid)
    edges = np.linspace(0.0, lb.max(), 25)
    idx = np.clip(np.digitize(lb, edges) - 1, 0, edges.size - 2)
    env = np.full(edges.size - 1, -np.inf)
    np.maximum.at(env, idx, lr)
    centers = 0.5 * (edges[:-1] + edges[1:])
    ok = np.isfinite(env)
    start = edges.size // 3
    sel = ok & (np.arange(env.size) >= start)
    if np.count_nonzero(sel) >= 2:
        s = float(np.polyfit(centers[sel], env[sel], 1)[0])
    else:
        s = 0.0
    s = max(s, 0.0)
    K = float(np.exp(np.max(lr - s * lb)))
    return K, s


def verify_growth_exponents(weight: Weight, K: float, s: float, n_list, grid=None) -> float:
    """Largest observed ratio / (K * bracket^s) on a grid; <= 1 means it holds."""
    if grid is None:
        grid = sweep_grid(list(n_list), weight, size=301)
    lr, lb = _growth_samples(weight, n_list, grid, max_points=200)
    return float(np.exp(np.max(lr - s * lb)) / K)


@dataclass(frozen=True)
class ClassReport:
    """Outcome of a sweep of the class inequality.

    Attributes:
        delta, gamma: class parameters.
        lambda_est: largest sampled ratio (a lower bound for the constant).
        witness: (n, m, x) attaining it.
        in_upsilon: whether delta >= 1, gamma >= 0 and delta + gamma >= 2.
    """

    delta: float
    gamma: float
    lambda_est: float
    witness: tuple
    in_upsilon: bool


def _class_sweep(weight, delta, gamma, n_list, grid):
    if delta < 0 or gamma < 0:
        raise ParameterError("delta and gamma must be nonnegative")
    n_list = sorted(set(int(n) for n in n_list))
    if grid is None:
        grid = sweep_grid(n_list, weight)
    x = np.asarray(grid, dtype=float)
    ph = phi(x)
    vals = {n: weight.average(n, x) for n in n_list}
    best, witness = -np.inf, None
    for n in n_list:
        num = vals[n] * ph**gamma
        for m in n_list:
            if m > n:
                continue
            den = float(n) ** delta * float(m) ** (gamma - delta) * delta_n(m, x) ** gamma * vals[m]
            ratio = num / den
            k = int(np.argmax(ratio))
            if ratio[k] > best:
                best, witness = float(ratio[k]), (n, m, float(x[k]))
    in_upsilon = delta >= 1 and gamma >= 0 and delta + gamma >= 2
    return ClassReport(float(delta), float(gamma), best, witness, in_upsilon)


def check_crucial_inequality(weight: Weight, delta: float, gamma: float, n_list, grid=None,
                             cfg: QuadratureConfig = DEFAULT_CFG) -> ClassReport:
    """Sweep w_n(x)/w_m(x) against (n/m)^delta (1 + 1/(m phi(x)))^gamma.

    Uses the algebraically identical form
    w_n phi^gamma / (n^delta m^(gamma-delta) delta_m^gamma w_m), which stays
    finite at x = +-1 because m delta_m(x) = phi(x) + 1/m.
    """
    return _class_sweep(weight, delta, gamma, n_list, grid)


def class_membership(weight: Weight, delta: float, gamma: float, n_list, grid=None,
                     cfg: QuadratureConfig = DEFAULT_CFG) -> ClassReport:
    """Estimate Lambda in w_n phi^gamma <= Lambda n^delta m^(gamma-delta) delta_m^gamma w_m."""
    return _class_sweep(weight, delta, gamma, n_list, grid)


def dyadic_intervals(depth: int = 8):
    centers = np.linspace(-1.0, 1.0, 2**depth + 1)
    out = []
    for j in range(1, depth + 1):
        h = 2.0**-j
        for c in centers:
            if c - h >= -1.0 and c + h <= 1.0:
                out.append((c - h, c + h))
    return out


def check_a_star(weight: Weight, interval_family=None, cfg: QuadratureConfig = DEFAULT_CFG,
                 depth: int = 8) -> float:
    """sup of w(x)|I|/w(I) over the family and sample points x in I.

    Each interval is sampled at 33 equispaced points, plus points at
    distances |I| 4^{-k} (k <= depth) from any singularity inside it; the
    singular points themselves are skipped.
    """
    family = dyadic_intervals(depth) if interval_family is None else list(interval_family)
    lo = np.array([a for a, b in family], dtype=float)
    hi = np.array([b for a, b in family], dtype=float)
    masses = weight.mass(lo, hi)
    if np.any(masses <= 0):
        raise DegenerateWeightError("interval with zero weight in the A* family")
    t = np.linspace(0.0, 1.0, 33)
    x = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    vals = weight(x)
    sing = weight.singular_points
    for c in sing:
        vals = np.where(x == c, 0.0, vals)
    best = float(np.max(vals * ((hi - lo) / masses)[:, None]))
    if sing:
        offs = 4.0 ** -np.arange(1, depth + 1)
        for c in sing:
            inside = (lo <= c) & (c <= hi)
            if not np.any(inside):
                continue
            L = (hi - lo)[inside]
            for sgn in (1.0, -1.0):
                xs = c + sgn * L[:, None] * offs[None, :]
                ok = (xs >= lo[inside, None]) & (xs <= hi[inside, None])
                v = np.where(ok, weight(np.clip(xs, -1, 1)), 0.0)
                best = max(best, float(np.max(v * (L / masses[inside])[:, None])))
    return best
