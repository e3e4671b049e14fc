import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dwapprox.poly_core import (
    ChebPoly,
    DomainError,
    ParameterError,
    QuadratureConfig,
    cheb_grid,
    integrate,
    lp_norm,
    sign_change_roots,
    sup_norm,
)

coeff_lists = st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=12)


def test_from_power_matches_monomials():
    P = ChebPoly.from_power([1.0, 0.0, 3.0])
    x = np.linspace(-1, 1, 7)
    assert np.allclose(P(x), 1.0 + 3.0 * x**2)


def test_chebyshev_basis_derivative():
    # T_3' = 3 U_2 = 3 (4x^2 - 1)
    T3 = ChebPoly([0, 0, 0, 1])
    x = np.linspace(-1, 1, 9)
    assert np.allclose(T3.derivative()(x), 3 * (4 * x**2 - 1))
    assert T3.derivative(4).degree == 0


def test_evaluation_outside_interval_raises():
    with pytest.raises(DomainError):
        ChebPoly([1.0, 2.0])(1.5)
    assert ChebPoly([1.0, 2.0])(1.5, check=False) == pytest.approx(4.0)


def test_interpolate_smooth_function():
    P = ChebPoly.interpolate(np.exp, 20)
    x = cheb_grid(500)
    assert np.max(np.abs(P(x) - np.exp(x))) < 1e-14 * 10


def test_interpolate_on_subinterval_is_global():
    P = ChebPoly.interpolate(lambda x: x**2, 2, interval=(0.0, 0.5))
    assert P(0.9) == pytest.approx(0.81)


def test_roots_of_t4():
    r = ChebPoly([0, 0, 0, 0, 1]).roots()
    expect = np.sort(np.cos((2 * np.arange(1, 5) - 1) * np.pi / 8))
    assert np.allclose(r, expect)


def test_integrate_polynomial_and_singularity():
    assert integrate(lambda x: x**2, -1, 1) == pytest.approx(2 / 3, rel=1e-12)
    val = integrate(lambda x: np.abs(x) ** -0.5, -1, 1, singularities=[0.0])
    assert val == pytest.approx(4.0, rel=1e-9)


def test_integrate_endpoint_singularity():
    val = integrate(lambda x: (1 - x) ** -0.9, -1, 1, singularities=[1.0])
    assert val == pytest.approx(10 * 2**0.1, rel=1e-8)


def test_sup_norm_of_chebyshev_polynomial():
    T7 = ChebPoly([0] * 7 + [1])
    assert sup_norm(T7) == pytest.approx(1.0, abs=1e-12)
    g = lambda x: x * (1 - x)
    assert sup_norm(g, 0.0, 1.0) == pytest.approx(0.25, rel=1e-10)


def test_lp_norm_basic_values():
    one = lambda x: np.ones_like(x)
    for p in (0.5, 1.0, 2.0, 3.0):
        assert lp_norm(one, p) == pytest.approx(2.0 ** (1 / p), rel=1e-10)
    assert lp_norm(lambda x: x, 2.0) == pytest.approx(math.sqrt(2 / 3), rel=1e-10)
    assert lp_norm(lambda x: x, math.inf) == pytest.approx(1.0)


def test_lp_norm_weighted_and_zero_aware():
    w = lambda x: np.abs(x) ** -0.5
    val = lp_norm(lambda x: np.ones_like(x), 1.0, weight=w, singularities=[0.0])
    assert val == pytest.approx(4.0, rel=1e-8)
    # x changes sign at 0; the zero-aware rule absorbs the |x|^p cusp there
    exact = (2 / 1.5) ** 2
    assert lp_norm(lambda x: x, 0.5, method="zeros") == pytest.approx(exact, rel=1e-10)


def test_sign_change_roots():
    r = sign_change_roots(lambda x: x - 0.3, cheb_grid(64))
    assert r == pytest.approx([0.3], abs=1e-14)


def test_invalid_parameters():
    with pytest.raises(ParameterError):
        lp_norm(lambda x: x, 0.0)
    with pytest.raises(ParameterError):
        QuadratureConfig(rel_tol=0.0)
    with pytest.raises(ParameterError):
        ChebPoly([1.0]).derivative(-1)


@given(coeff_lists, coeff_lists)
def test_arithmetic_matches_pointwise(a, b):
    A, B = ChebPoly(a), ChebPoly(b)
    x = np.linspace(-1, 1, 11)
    assert np.allclose((A + B)(x), A(x) + B(x))
    assert np.allclose((A * B)(x), A(x) * B(x), atol=1e-9)


@given(coeff_lists)
def test_interpolation_reproduces_polynomials(c):
    P = ChebPoly(c)
    Q = ChebPoly.interpolate(lambda x: P(x), P.degree + 3)
    x = np.linspace(-1, 1, 13)
    assert np.allclose(Q(x), P(x), atol=1e-12)


@given(coeff_lists)
def test_antiderivative_inverts_derivative(c):
    P = ChebPoly(c)
    Q = P.antiderivative().derivative()
    x = np.linspace(-1, 1, 9)
    assert np.allclose(Q(x), P(x), atol=1e-12)
