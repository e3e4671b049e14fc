import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dwapprox.poly_core import ParameterError, cheb_grid, integrate
from dwapprox.weights import (
    WnEvaluator,
    builtin_weights,
    check_a_star,
    check_crucial_inequality,
    class_membership,
    constant,
    delta_max,
    delta_n,
    estimate_doubling_constant,
    estimate_growth_exponents,
    jacobi,
    phi,
    power_singularity,
    weight_from_spec,
)

W = builtin_weights()


def unit_exact(n, x):
    d = delta_n(n, x)
    return (np.minimum(x + d, 1.0) - np.maximum(x - d, -1.0)) / d


def test_scalars():
    assert phi(0.0) == 1.0 and phi(1.0) == 0.0
    assert delta_n(4, 1.0) == pytest.approx(1 / 16)
    assert delta_n(4, 0.0) == pytest.approx(1 / 4 + 1 / 16)
    assert delta_max(4, 0.0) == pytest.approx(1 / 4)
    assert delta_max(4, 1.0) == pytest.approx(1 / 16)


@pytest.mark.parametrize("n", [4, 16, 64])
def test_unit_weight_average_is_clipped_window(n):
    x = cheb_grid(1024)
    ev = WnEvaluator(constant(1.0), n)
    assert np.max(np.abs(ev(x) - unit_exact(n, x))) < 1e-12


def test_interior_power_weight_at_singularity():
    w = power_singularity(0.0, 0.5)
    for n in (4, 16, 64):
        d = delta_n(n, 0.0)
        assert w.average(n, 0.0) == pytest.approx(4 * d**-0.5, rel=1e-9)


@pytest.mark.parametrize("a,b", [(-0.5, 0.0), (0.5, 0.5), (2.0, 0.0), (-0.9, 0.3)])
def test_jacobi_mass_against_quadrature(a, b):
    w = jacobi(a, b)
    lo, hi = -0.3, 0.99999
    ref = integrate(w, lo, hi, singularities=[1.0] if a < 0 else [])
    assert w.mass(lo, hi) == pytest.approx(ref, rel=1e-9)


def test_mass_of_window_touching_singular_endpoint():
    w = W["interior_and_right"]
    x = 1.0 - 1e-15
    val = w.average(128, x)
    assert np.isfinite(val) and val > 0


def test_interp_cache_tracks_exact_values():
    for name in ("jacobi_right_09", "interior_09", "step_tenth"):
        ev = WnEvaluator(W[name], 32)
        x = np.linspace(-0.999, 0.999, 3001)
        rel = np.abs(ev.interp(x) / ev(x) - 1.0)
        assert rel.max() < 5e-3, name


def test_doubling_and_a_star_of_unit_weight():
    assert estimate_doubling_constant(constant(1.0), 6) == pytest.approx(2.0)
    assert check_a_star(constant(1.0)) == pytest.approx(1.0)


def test_growth_exponent_of_unit_weight_is_near_zero():
    # w_n only varies between 1 and 2, so the fitted exponent is tiny
    K, s = estimate_growth_exponents(constant(1.0), [8, 16])
    assert 0.0 <= s < 0.05
    assert K <= 2.0 + 1e-9


def test_growth_exponent_increases_with_singularity():
    _, s_half = estimate_growth_exponents(W["jacobi_right_half"], [8, 16, 32])
    _, s_09 = estimate_growth_exponents(W["jacobi_right_09"], [8, 16, 32])
    assert 0 < s_half < s_09


@pytest.mark.parametrize("name", ["constant", "jacobi_right_half", "interior_09", "step_tenth"])
def test_upsilon_region_constant_is_one(name):
    rep = check_crucial_inequality(W[name], 1.0, 1.0, [4, 8, 16, 32])
    assert rep.in_upsilon
    assert rep.lambda_est <= 1 + 1e-6


def test_class_report_witness_and_region_flag():
    rep = class_membership(W["jacobi_right_09"], 1.0, 0.5, [4, 8, 16, 32, 64])
    assert not rep.in_upsilon
    n, m, x = rep.witness
    assert m <= n and -1 <= x <= 1
    assert rep.lambda_est > 1


def test_negative_class_parameters_rejected():
    with pytest.raises(ParameterError):
        class_membership(constant(1.0), -1.0, 0.0, [4])


def test_weight_spec_round_trip():
    spec = {"kind": "product", "params": {"factors": [
        {"kind": "jacobi", "params": {"a": -0.5, "b": 0.0}},
        {"kind": "power_singularity", "params": {"c": 0.0, "alpha": 0.5}}]}}
    w = weight_from_spec(spec)
    ref = W["interior_and_right"]
    x = np.array([-0.7, 0.2, 0.6])
    assert np.allclose(w(x), ref(x))
    with pytest.raises(ParameterError):
        weight_from_spec({"kind": "nope"})


def test_weight_is_zero_outside_and_infinite_at_singularity():
    w = power_singularity(0.3, 0.5)
    assert w(1.5) == 0.0 and w(-2.0) == 0.0
    assert math.isinf(w(0.3))


@given(st.floats(0.1, 10.0), st.integers(1, 64), st.floats(-1.0, 1.0))
def test_average_is_linear_in_the_weight(c, n, x):
    assert constant(c).average(n, x) == pytest.approx(c * constant(1.0).average(n, x), rel=1e-12)


@given(st.floats(-0.99, 0.5), st.floats(0.01, 0.4), st.floats(0.01, 0.4))
def test_mass_is_additive(a, h1, h2):
    w = W["interior_and_right"]
    m, b = a + h1, min(a + h1 + h2, 1.0)
    assert w.mass(a, b) == pytest.approx(w.mass(a, m) + w.mass(m, b), rel=1e-9)
