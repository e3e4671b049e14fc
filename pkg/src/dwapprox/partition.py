"""Chebyshev partition of [-1, 1] and its polynomial partition of unity.

`make_T` builds the normalized polynomial T_i that rises from 0 to 1 across
the i-th Chebyshev interval, as the antiderivative of a power of the
kernel `che`. Values far from the interval are smaller than the absolute
rounding level of a Chebyshev series, so `PartitionPoly` also offers
value-space evaluations (`deviation`, `derivative_values`) that keep full
relative accuracy there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.fft import dct

from .poly_core import DEFAULT_CFG, ChebPoly, ParameterError, QuadratureConfig, cheb_grid
from .weights import delta_n

__all__ = [
    "ChebPartition",
    "PartitionPoly",
    "Lemma31Report",
    "make_partition",
    "psi",
    "che",
    "make_T",
    "partition_polys",
    "verify_lemma31",
    "DEFAULT_C_STAR",
]

DEFAULT_C_STAR = 4


@dataclass(frozen=True)
class ChebPartition:
    """Nodes x_i = cos(i pi / n), i = 0..n, and intervals I_i = [x_i, x_{i-1}]."""

    n: int
    nodes: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)

    def interval(self, i: int) -> tuple[float, float]:
        self._check(i)
        return float(self.nodes[i]), float(self.nodes[i - 1])

    def length(self, i: int) -> float:
        self._check(i)
        return float(self.lengths[i - 1])

    def index_of(self, x) -> np.ndarray:
        """Index i with x in I_i (x_i <= x <= x_{i-1})."""
        x = np.asarray(x, dtype=float)
        theta = np.arccos(np.clip(x, -1.0, 1.0))
        return np.clip(np.ceil(theta * self.n / np.pi).astype(int), 1, self.n)

    def _check(self, i):
        if not 1 <= i <= self.n:
            raise ParameterError(f"interval index {i} outside 1..{self.n}")


def make_partition(n: int) -> ChebPartition:
    if n < 1:
        raise ParameterError("n must be positive")
    nodes = np.cos(np.arange(n + 1) * np.pi / n)
    nodes[0], nodes[-1] = 1.0, -1.0
    if n % 2 == 0:
        nodes[n // 2] = 0.0
    lengths = nodes[:-1] - nodes[1:]
    nodes.setflags(write=False)
    lengths.setflags(write=False)
    return ChebPartition(n, nodes, lengths)


def psi(part: ChebPartition, i: int, x):
    """|I_i| / (|x - x_i| + |I_i|)."""
    L = part.length(i)
    return L / (np.abs(np.asarray(x, dtype=float) - part.nodes[i]) + L)


# ---------------------------------------------------------------------------
# The kernel che_i
# ---------------------------------------------------------------------------


def _poles(n: int, i: int):
    shift = 0.25 if i < n / 2 else 0.75
    a = math.cos(i * math.pi / n - shift * math.pi / n)
    b = math.cos(i * math.pi / n - 0.5 * math.pi / n)
    return a, b


@lru_cache(maxsize=64)
def _kernel_series(n: int):
    """Chebyshev coefficients of T_2n, U_{2n-1} and a few derivatives."""
    t2n = np.zeros(2 * n + 1)
    t2n[-1] = 1.0
    u = cheb.chebder(t2n) / (2 * n)
    t_der = [t2n]
    u_der = [u]
    for _ in range(3):
        t_der.append(cheb.chebder(t_der[-1]))
        u_der.append(cheb.chebder(u_der[-1]))
    return t_der, u_der


def kernel_basis(n: int, x):
    """T_2n(x) and U_{2n-1}(x), the numerators shared by every che_i.

    Real points in [-1, 1] use the trigonometric forms; other points the
    Chebyshev series.
    """
    x = np.atleast_1d(np.asarray(x))
    if np.isrealobj(x) and np.all(np.abs(x) <= 1.0):
        theta = np.arccos(x)
        sin_t = np.sin(theta)
        T = np.cos(2 * n * theta)
        with np.errstate(invalid="ignore", divide="ignore"):
            U = np.where(sin_t > 0, np.sin(2 * n * theta) / np.where(sin_t > 0, sin_t, 1.0), 2.0 * n * np.sign(x))
        return T, U
    t_der, u_der = _kernel_series(n)
    return cheb.chebval(x, t_der[0]), cheb.chebval(x, u_der[0])


@lru_cache(maxsize=4096)
def _pole_taylor(n: int, pole: float, which: int):
    t_der, u_der = _kernel_series(n)
    series = t_der if which == 0 else u_der
    return tuple(float(cheb.chebval(pole, series[k])) for k in (1, 2, 3))


def _quotient(numer, n, which, pole, x, guard):
    """numer / (x - pole) with a Taylor expansion near the root ``pole``."""
    d = x - pole
    near = np.abs(d) < guard
    if not np.any(near):
        return numer / d
    out = np.empty(np.shape(x), dtype=np.result_type(x, float))
    far = ~near
    out[far] = numer[far] / d[far]
    c1, c2, c3 = _pole_taylor(n, pole, which)
    dn = d[near]
    out[near] = c1 + dn * (c2 / 2.0 + dn * c3 / 6.0)
    return out


def che(n: int, i: int, x, basis=None):
    """The kernel (T_2n(x)/(x - a))^2 + (1 - x^2)(U_{2n-1}(x)/(x - b))^2.

    T_2n(x) = cos(2n arccos x) vanishes at a = x_i^0 and
    sqrt(1-x^2) U_{2n-1}(x) = sin(2n arccos x) vanishes at b = x-bar_i, so
    che_i is a polynomial of degree 4n - 2. Within 1e-6 (relative to the
    local spacing) of a pole the quotient is replaced by its Taylor series.
    Complex arguments are accepted; ``basis`` may hold precomputed
    `kernel_basis` values at x.
    """
    if not 1 <= i <= n:
        raise ParameterError(f"interval index {i} outside 1..{n}")
    x = np.atleast_1d(np.asarray(x))
    a, b = _poles(n, i)
    T, U = kernel_basis(n, x) if basis is None else basis
    ga = 1e-6 * max(math.sqrt(1.0 - a * a), 1.0 / n)
    gb = 1e-6 * max(math.sqrt(1.0 - b * b), 1.0 / n)
    qa = _quotient(T, n, 0, a, x, ga)
    qb = _quotient(U, n, 1, b, x, gb)
    return qa * qa + (1.0 - x * x) * qb * qb


# ---------------------------------------------------------------------------
# T_i
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PartitionPoly:
    """T_i(n, mu, eps1, eps2) with its normalization held in log form.

    Attributes:
        i, n, mu, eps1, eps2: construction parameters.
        poly: the polynomial, degree (4n-2) mu + eps1 + eps2 + 1.
        log_lambda: log of the normalization constant lambda_i.
    """

    i: int
    n: int
    mu: int
    eps1: int
    eps2: int
    poly: ChebPoly = field(repr=False)
    log_lambda: float
    _log_scale: float = field(repr=False, default=0.0)
    _total: float = field(repr=False, default=1.0)

    @property
    def degree(self) -> int:
        return self.poly.degree

    @property
    def lambda_i(self) -> float:
        return math.exp(self.log_lambda)

    def __call__(self, x):
        return self.poly(x)

    def step_point(self) -> float:
        """Where the integrand changes sign, or x_i when it does not."""
        part = make_partition(self.n)
        if self.eps2 and not self.eps1:
            return float(part.nodes[self.i - 1])
        return float(part.nodes[self.i])

    def derivative_kernel(self, x, basis=None):
        """T_i'(x) evaluated in value space (complex x allowed)."""
        part = make_partition(self.n)
        x = np.asarray(x)
        shape = x.shape
        xf = x.ravel()
        if basis is not None:
            basis = (basis[0].ravel(), basis[1].ravel())
        c = che(self.n, self.i, xf, basis)
        val = np.exp(self.mu * np.log(c) - self._log_scale) / self._total
        if self.eps1:
            val = val * (xf - part.nodes[self.i])
        if self.eps2:
            val = val * (part.nodes[self.i - 1] - xf)
        return val.reshape(shape)

    def deviation(self, x, step: float | None = None, order: int | None = None, layout=None):
        """T_i(x) minus the unit step at ``step`` (default `step_point`).

        Accumulates single-signed Gauss-Legendre panel integrals in the
        angle variable from whichever end is on the same side of the step,
        so the result keeps relative accuracy where it is tiny. ``layout``
        may hold a precomputed `DeviationLayout` for the same x.
        """
        step = self.step_point() if step is None else step
        lay = layout or DeviationLayout(self.n, x, order or (6 * self.mu + 24))
        full = lay.full_weights @ self.derivative_kernel(lay.full_nodes, lay.full_basis)
        g = self.derivative_kernel(lay.part_nodes, lay.part_basis)
        part = np.sum(g * lay.part_weights, axis=1)
        from_right = np.concatenate([[0.0], np.cumsum(full)])  # from x=1 down to edge k
        from_left = np.concatenate([[0.0], np.cumsum(full[::-1])])  # from x=-1 up
        m, k = lay.panels, lay.k
        upper = lay.x >= step
        out = np.empty(lay.x.shape)
        # upper: integral from 1 to edge k plus the partial panel (edge k to x)
        out[upper] = -(from_right[k[upper]] + part[upper])
        # lower: integral from -1 to edge k+1 plus the partial panel (x to edge k+1)
        low = ~upper
        out[low] = from_left[m - k[low] - 1] + lay.part_complement(part, full)[low]
        return out

    def derivative_values(self, x, nu: int, radius_factor: float = 0.25, points: int = 48, circle=None):
        """T_i^{(nu)}(x) via value-space formulas.

        nu = 0 uses `deviation` plus the step, nu = 1 the integrand itself,
        and nu >= 2 a trapezoidal Cauchy integral of the integrand on a
        circle of radius radius_factor * delta_n(x). ``circle`` may hold a
        precomputed `CauchyCircle` for the same x.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if nu == 0:
            return self.deviation(x) + (x >= self.step_point())
        if nu == 1:
            return self.derivative_kernel(x)
        circ = circle or CauchyCircle(self.n, x, radius_factor, points)
        g = self.derivative_kernel(circ.z, circ.basis)
        return circ.coefficient(g, nu - 1)


class DeviationLayout:
    """Quadrature nodes for `PartitionPoly.deviation`, shared by every T_i
    with the same n and rule order.

    The angle range [0, pi] is cut into 2n equal panels; ``full_*`` is the
    rule on the whole panels and ``part_*`` the rule on the partial panel
    from the panel's left edge (in angle) to each x.
    """

    def __init__(self, n: int, x, order: int):
        self.x = np.atleast_1d(np.asarray(x, dtype=float))
        self.panels = m = 2 * n
        t, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(0.0, math.pi, m + 1)  # angle, x = cos(theta)
        theta = np.arccos(np.clip(self.x, -1.0, 1.0))
        self.k = np.clip(np.floor(theta / (math.pi / m)).astype(int), 0, m - 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        th = edges[:-1, None] + half[:, None] * (t[None, :] + 1.0)
        self.full_nodes = np.cos(th)
        # one row of weights per panel, applied as a block-diagonal contraction
        fw = (half[:, None] * w[None, :]) * np.sin(th)
        self._full_w = fw
        self.full_basis = kernel_basis(n, self.full_nodes.ravel())
        self.full_basis = (self.full_basis[0].reshape(th.shape), self.full_basis[1].reshape(th.shape))
        lo = edges[self.k]
        ph = 0.5 * (theta - lo)
        tp = lo[:, None] + ph[:, None] * (t[None, :] + 1.0)
        self.part_nodes = np.cos(tp)
        self.part_weights = ph[:, None] * w[None, :] * np.sin(tp)
        pb = kernel_basis(n, self.part_nodes.ravel())
        self.part_basis = (pb[0].reshape(tp.shape), pb[1].reshape(tp.shape))

    @property
    def full_weights(self):
        return _RowContraction(self._full_w)

    def part_complement(self, part, full):
        """Integral from x to the panel's right edge (in angle)."""
        return full[self.k] - part


class _RowContraction:
    """Row-wise dot product (panel sums), written as ``weights @ values``."""

    def __init__(self, w):
        self.w = w

    def __matmul__(self, values):
        return np.sum(self.w * values, axis=1)


class CauchyCircle:
    """Points x + rho e^{i t} (rho = radius_factor * delta_n(x)) shared by the
    Cauchy-integral derivatives of every T_i with the same n."""

    def __init__(self, n: int, x, radius_factor: float = 0.25, points: int = 48):
        self.x = np.atleast_1d(np.asarray(x, dtype=float))
        self.rho = radius_factor * delta_n(n, self.x)
        self.angles = 2 * math.pi * (np.arange(points) + 0.5) / points
        self.z = self.x[:, None] + self.rho[:, None] * np.exp(1j * self.angles)[None, :]
        T, U = kernel_basis(n, self.z.ravel())
        self.basis = (T.reshape(self.z.shape), U.reshape(self.z.shape))

    def coefficient(self, g, k: int):
        """k-th derivative of the antiderivative's integrand: (k)! * Taylor coefficient k."""
        coef = (g * np.exp(-1j * k * self.angles)[None, :]).mean(axis=1).real
        return coef * math.factorial(k) / self.rho**k


def _integrand_samples(n, i, mu, eps1, eps2, x):
    part = make_partition(n)
    fac = np.ones(x.shape)
    if eps1:
        fac = fac * (x - part.nodes[i])
    if eps2:
        fac = fac * (part.nodes[i - 1] - x)
    return fac, che(n, i, x)


def make_T(n: int, mu: int, eps1: int, eps2: int, i: int, cfg: QuadratureConfig = DEFAULT_CFG,
           c_star: float = DEFAULT_C_STAR) -> PartitionPoly:
    """Normalized antiderivative of (y-x_i)^eps1 (x_{i-1}-y)^eps2 che_i(y)^mu.

    The integrand (a polynomial of degree (4n-2) mu + eps1 + eps2) is
    sampled at that many plus one Chebyshev points, converted to
    coefficients with a type-II DCT, integrated exactly in coefficient
    space from -1, and scaled so that T_i(1) = 1.

    Raises:
        ParameterError: bad indices, eps outside {0, 1}, or mu below
            c_star * max(eps1, eps2, 1).
    """
    if eps1 not in (0, 1) or eps2 not in (0, 1):
        raise ParameterError("eps1 and eps2 must be 0 or 1")
    if not 1 <= i <= n:
        raise ParameterError(f"interval index {i} outside 1..{n}")
    if mu < c_star * max(eps1, eps2, 1):
        raise ParameterError(f"mu={mu} is below the floor {c_star}*max(eps1, eps2, 1)")
    deg = (4 * n - 2) * mu + eps1 + eps2
    npts = deg + 1
    xk = np.cos(np.pi * (np.arange(npts) + 0.5) / npts)
    fac, c = _integrand_samples(n, i, mu, eps1, eps2, xk)
    log_c = np.log(c)
    log_scale = mu * float(np.max(log_c))
    vals = fac * np.exp(mu * log_c - log_scale)
    coeffs = dct(vals, type=2) / npts
    coeffs[0] *= 0.5
    anti = cheb.chebint(coeffs, lbnd=-1.0)
    total = float(cheb.chebval(1.0, anti))
    if not total > 0 or not math.isfinite(total):
        raise ParameterError("normalization failed; integrand has no positive mass")
    poly = ChebPoly(anti / total)
    log_lambda = -math.log(total) - log_scale
    return PartitionPoly(i, n, mu, eps1, eps2, poly, log_lambda, log_scale, total)


@lru_cache(maxsize=32)
def partition_polys(n: int, mu: int, eps1: int = 0, eps2: int = 0) -> tuple:
    """All T_1..T_n for one parameter set (cached; the objects are immutable)."""
    return tuple(make_T(n, mu, eps1, eps2, i) for i in range(1, n + 1))


# ---------------------------------------------------------------------------
# Verification of the localization bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lemma31Report:
    """Fitted constants of |T_i - chi_i| <= c psi_i^mu and
    |I_i|^nu |T_i^(nu)| <= c psi_i^mu.

    Attributes:
        n, mu, nu0: parameters.
        constants: {(i, nu): sup of the normalized quantity}.
        by_nu: {nu: max over the sampled i}.
    """

    n: int
    mu: int
    nu0: int
    constants: dict
    by_nu: dict


def _thinned(n):
    return sorted({1, max(1, n // 4), max(1, n // 2), max(1, (3 * n) // 4), n})


def verify_lemma31(n: int, mu: int, nu0: int, cfg: QuadratureConfig = DEFAULT_CFG,
                   eps1: int = 0, eps2: int = 0, indices=None, full: bool = False,
                   grid_size: int = 4096) -> Lemma31Report:
    """Sup over a grid of the normalized deviation and derivative sizes.

    Indices default to {1, n/4, n/2, 3n/4, n}; ``full`` sweeps all of them.
    """
    part = make_partition(n)
    if indices is None:
        indices = range(1, n + 1) if full else _thinned(n)
    base = cheb_grid(grid_size)
    constants = {}
    for i in indices:
        T = make_T(n, mu, eps1, eps2, i, cfg)
        lo = part.nodes[min(i + 2, n)]
        hi = part.nodes[max(i - 3, 0)]
        x = np.unique(np.concatenate([base, np.linspace(lo, hi, 257), part.nodes]))
        ps = psi(part, i, x) ** mu
        L = part.length(i)
        dev = np.abs(T.deviation(x))
        constants[(i, 0)] = float(np.max(dev / ps))
        for nu in range(1, nu0 + 1):
            der = np.abs(T.derivative_values(x, nu))
            constants[(i, nu)] = float(np.max(L**nu * der / ps))
    by_nu = {nu: max(v for (i, k), v in constants.items() if k == nu) for nu in range(nu0 + 1)}
    return Lemma31Report(n, mu, nu0, constants, by_nu)
