import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import IntegrationWarning, quad
from scipy.special import eval_legendre

from dwapprox.approx import (
    NormRule,
    UnsupportedExponentError,
    best_approx,
    default_mu,
    jackson_operator,
    k_functional,
    lambda_p,
    qn_weight_poly,
    realization,
    realization_objective,
    wn_evaluator,
)
from dwapprox.harness import corpus
from dwapprox.poly_core import ChebPoly, ParameterError
from dwapprox.weights import builtin_weights, constant

F = corpus()
W = builtin_weights()


def legendre_projection_error(f, n):
    opts = dict(points=[0.0], epsabs=1e-15, epsrel=1e-13, limit=200)
    with warnings.catch_warnings():
        # odd coefficients of an even f vanish and quad then reports roundoff
        warnings.simplefilter("ignore", IntegrationWarning)
        total = quad(lambda x: f(x) ** 2, -1, 1, **opts)[0]
        for k in range(n):
            ck = quad(lambda x: f(x) * eval_legendre(k, x), -1, 1, **opts)[0]
            total -= ck**2 * (2 * k + 1) / 2
    return math.sqrt(max(total, 0.0))


def test_lambda_p():
    assert lambda_p(0.5) == 0.5 and lambda_p(3.0) == 3.0 and lambda_p(math.inf) == 1.0


@pytest.mark.parametrize("n", [4, 8, 16])
def test_least_squares_matches_orthogonal_projection(n):
    res = best_approx(F["abs"], n, 2.0)
    ref = legendre_projection_error(lambda x: abs(x), n)
    assert res.error == pytest.approx(ref, rel=1e-8)
    assert res.certified == "exact"


def test_minimax_of_abs_by_quadratics():
    # |x| - (x^2 + 1/8) equioscillates at 0, +-1/sqrt(2), +-1
    res = best_approx(F["abs"], 3, math.inf)
    assert res.error == pytest.approx(1 / 8, rel=1e-8)
    assert res.certified == "exchange"


def test_l1_best_constant_for_abs():
    # the LP runs on a discrete rule, so the median lands within a node spacing of 1/2
    res = best_approx(F["abs"], 1, 1.0)
    assert res.error == pytest.approx(0.5, rel=1e-6)


def test_polynomials_are_reproduced():
    P = ChebPoly([0.3, -0.2, 0.5, 0.1])
    f = lambda x: P(x, check=False)
    for p in (1.0, 2.0, math.inf):
        assert best_approx(f, 4, p).error < 1e-9


def test_quasinorm_search_is_an_upper_bound_and_decreases():
    e8 = best_approx(F["abs"], 8, 0.5)
    e16 = best_approx(F["abs"], 16, 0.5)
    assert e8.certified == "upper-bound"
    assert e16.error < e8.error


def test_weighted_error_uses_averaged_weight():
    ev = wn_evaluator(W["jacobi_right_half"], 16)
    weighted = best_approx(F["abs"], 16, 2.0, ev)
    plain = best_approx(F["abs"], 16, 2.0)
    assert weighted.error != pytest.approx(plain.error, rel=1e-3)


def test_norm_rule_integrates_weight():
    ev = wn_evaluator(constant(1.0), 8)
    rule = NormRule.for_problem(None, ev, n=8, fine=True)
    ref = quad(lambda x: float(ev(np.array([x]))[0]), -1, 1, limit=200)[0]
    assert rule.norm(np.ones_like(rule.nodes), 1.0) == pytest.approx(ref, rel=1e-6)


def test_default_mu_floor():
    assert default_mu(None, 1, 2.0) >= 4
    assert default_mu(W["jacobi_zero_right"], 2, 0.5) > default_mu(W["constant"], 2, 0.5)


def test_jackson_operator_degree_and_error():
    P = jackson_operator(F["abs"], 8, 2, 2.0, W["constant"], mu=4)
    # T_i has degree (4n-2) mu + 1 and the local pieces degree r - 1
    assert P.degree == (4 * 8 - 2) * 4 + 2
    errs = []
    for n in (8, 16):
        Q = jackson_operator(F["abs"], n, 2, 2.0, W["constant"])
        x = np.linspace(-1, 1, 4001)
        errs.append(np.sqrt(np.mean((np.abs(x) - Q(x)) ** 2)))
    assert errs[1] < errs[0] < 0.05


def test_envelope_dominates_step_function():
    Q = qn_weight_poly(W["jacobi_right_half"], 16, 2.0)
    x = np.linspace(-0.999, 0.999, 801)
    assert np.all(Q.values(x) >= Q.step_values(x) * (1 - 1e-9))
    assert Q.poly.degree > 0


def test_envelope_rejects_bad_exponent():
    with pytest.raises(ParameterError):
        qn_weight_poly(W["constant"], 8, 0.0)


@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_realization_chain(p):
    f, n, r, t = F["abs"], 16, 1, 1 / 16
    w = W["jacobi_right_half"]
    Rn = realization(f, n, r, t, p, w, "phi_n")
    R = realization(f, n, r, t, p, w, "phi", candidates=[Rn.argmin_poly])
    K = k_functional(f, r, t, p, w, n, candidates=[R.argmin_poly, Rn.argmin_poly])
    assert K <= R.value <= Rn.value
    assert R.value <= R.star_value


def test_realization_objective_matches_result():
    f, n = F["x_abs_x"], 12
    res = realization(f, n, 2, 0.1, 2.0, W["constant"])
    rule = NormRule.for_problem(f, wn_evaluator(W["constant"], n), n=n, fine=True)
    assert realization_objective(res.argmin_poly, f, 2, 0.1, 2.0, rule, "phi", n) == pytest.approx(res.value)


def test_k_functional_refuses_quasinorms():
    with pytest.raises(UnsupportedExponentError):
        k_functional(F["abs"], 1, 0.1, 0.5, W["constant"], 8)


def test_realization_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        realization(F["abs"], 1, 2, 0.1, 2.0)
    with pytest.raises(ParameterError):
        realization(F["abs"], 8, 1, 0.0, 2.0)


@given(st.integers(2, 12))
def test_least_squares_error_is_monotone(n):
    a = best_approx(F["sqrt_abs_shift"], n, 2.0).error
    b = best_approx(F["sqrt_abs_shift"], n + 1, 2.0).error
    assert b <= a * (1 + 1e-10)
