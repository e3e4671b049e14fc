import math
import warnings

import numpy as np
import pytest

from dwapprox import harness as H
from dwapprox.poly_core import ParameterError
from dwapprox.weights import builtin_weights

W = builtin_weights()
C = H.corpus()


def test_fit_rate_exact_power():
    seq = [(n, n**-2.0) for n in (4, 8, 16, 32, 64)]
    assert H.fit_rate(seq) == pytest.approx(2.0, abs=1e-9)


def test_fit_rate_scaled_root():
    seq = [(n, 3 * n**-0.5) for n in (4, 8, 16, 32, 64)]
    assert H.fit_rate(seq) == pytest.approx(0.5, abs=1e-12)


def test_fit_rate_with_parity_wobble():
    seq = [(n, (1 + (-1) ** n * 0.01) / n) for n in range(5, 40)]
    assert H.fit_rate(seq) == pytest.approx(1.0, abs=0.02)


def test_fit_rate_filters_nonpositive():
    seq = [(n, n**-1.0) for n in (4, 8, 16, 32, 64, 128)] + [(256, 0.0)]
    with pytest.warns(RuntimeWarning):
        assert H.fit_rate(seq) == pytest.approx(1.0)
    with pytest.raises(ParameterError), pytest.warns(RuntimeWarning):
        H.fit_rate([(4, 1.0), (8, 0.5), (16, 0.0)])


def test_corpus_contents():
    assert set(C) == {"abs", "abs_pow_1_5", "sqrt_abs_shift", "x_abs_x", "sin_5x", "trunc_pow_2_5"}
    assert C["sqrt_abs_shift"].singular_points == (0.3,)
    assert C["trunc_pow_2_5"](np.array([-0.5, 1.0])).tolist() == [0.0, 1.0]


def _toy_report(ratios, rule):
    rows = [H.ReportRow(n, 1, 2.0, r, 1.0) for n, r in ratios]
    return H.ExperimentReport("toy", rows, metadata={"rule": rule}).finalize()


def test_verdict_rules():
    trend = {"kind": "trend", "max_slope": 0.1}
    assert _toy_report([(8, 1.0), (16, 1.02), (32, 1.01)], trend).verdict == "pass"
    assert _toy_report([(8, 1.0), (16, 2.0), (32, 4.0)], trend).verdict == "fail"
    cons = {"kind": "consecutive", "max_step": 1.5}
    assert _toy_report([(8, 1.0), (16, 1.4), (32, 1.9)], cons).verdict == "pass"
    assert _toy_report([(8, 1.0), (16, 1.6)], cons).verdict == "fail"
    noise = [(8, 3e-15), (16, 2e-14), (32, 8e-14)]
    assert _toy_report(noise, cons).verdict == "fail"
    assert _toy_report(noise, {**cons, "floor": 1e-10}).verdict == "pass"
    assert _toy_report([(8, 1e-12), (16, 1e-3)], {**cons, "floor": 1e-10}).verdict == "fail"
    brk = {"kind": "bracket", "low": 0.5, "high": 2.0}
    assert _toy_report([(8, 0.6), (16, 1.9)], brk).verdict == "pass"
    assert _toy_report([(8, 0.4)], brk).verdict == "fail"


def test_report_serialization_and_replay():
    rep = H.check_bernstein(None, 1, 2.0, [4, 8], trials=3, seed=5)
    text = rep.to_csv()
    lines = text.split("\n")
    assert lines[0] == "check_id,n,param_r,param_p,lhs,rhs,ratio,witness"
    assert "\r" not in text
    lhs = lines[1].split(",")[4]
    assert float(lhs) == rep.rows[0].lhs and len(lhs.replace(".", "").lstrip("0")) >= 15
    back = H.ExperimentReport.from_json(rep.to_json())
    assert back.rows == rep.rows
    assert H.evaluate_verdict(back) == rep.verdict


def test_same_seed_gives_identical_csv():
    a = H.check_bernstein(W["interior_half"], 2, 0.5, [8, 16], trials=5, seed=11).to_csv()
    b = H.check_bernstein(W["interior_half"], 2, 0.5, [8, 16], trials=5, seed=11).to_csv()
    c = H.check_bernstein(W["interior_half"], 2, 0.5, [8, 16], trials=5, seed=12).to_csv()
    assert a == b and a != c


def test_bernstein_of_constants_is_degenerate():
    rep = H.check_bernstein(W["constant"], 1, 2.0, [1], trials=4)
    assert rep.rows[0].lhs == 0.0
    assert rep.verdict == "degenerate-pass"


def test_bernstein_unit_weight_sup_norm_bounded():
    rep = H.check_bernstein(W["constant"], 1, math.inf, [8, 16, 32, 64, 128], trials=20)
    assert rep.passed


def test_bernstein_growth_variant():
    rep = H.check_bernstein_growth(2.0, trials=10)
    assert [r.n for r in rep.rows] == list(range(9))
    assert rep.passed


def test_factorial_bernstein_identity_and_refusal():
    rep = H.check_factorial_bernstein(None, 0.5, [16], 2, 2, trials=3)
    assert rep.rows[0].ratio == pytest.approx(2.0**-2)
    with pytest.raises(ParameterError):
        H.check_factorial_bernstein(None, 1.0, [16], 2, 0)


def test_factorial_bernstein_phi_variant_bounded():
    rep = H.check_factorial_bernstein(None, 0.5, [16, 32], 2, 0, trials=10, variant="phi")
    assert rep.passed


def test_poly_modulus_bound_unit_weight():
    rep = H.check_poly_modulus_bound(W["constant"], 0.0, 0.0, 2, 0.5, 32, 8, trials=5)
    assert rep.metadata["c_diamond"] >= 2.0**-8
    assert rep.passed


def test_poly_modulus_bound_preconditions():
    with pytest.raises(ParameterError):
        H.check_poly_modulus_bound(W["constant"], 0.0, 0.0, 2, 1.5, 32, 8)
    with pytest.raises(ParameterError):
        H.check_poly_modulus_bound(W["constant"], 0.0, 0.0, 2, 0.5, 8, 32)
    with pytest.raises(ParameterError):
        H.check_poly_modulus_bound(W["constant"], 0.0, 3.0, 2, 0.5, 32, 8)


def test_difference_bracket_small_case():
    rep = H.check_difference_bracket(W["constant"], 2, 0.5, 16, trials=4, calibration_trials=3, h_points=4)
    assert rep.passed
    assert rep.metadata["c_diamond"] > 0


def test_jackson_polynomial_is_degenerate():
    P = H.polynomial_function([1.0, 2.0])
    rep = H.check_jackson(P, W["constant"], 2, 2.0, [8, 16])
    assert rep.verdict == "degenerate-pass"


def test_jackson_abs_bounded():
    rep = H.check_jackson(C["abs"], W["constant"], 2, 2.0, [8, 16, 32, 64])
    assert rep.passed
    assert rep.metadata["lhs_kind"] == "best"


def test_jackson_quasinorm_uses_operator():
    rep = H.check_jackson(C["sqrt_abs_shift"], W["jacobi_right_half"], 1, 0.5, [8, 16, 32])
    assert rep.metadata["lhs_kind"] == "operator"
    assert rep.rows[0].witness.startswith("operator_degree=")


def test_inverse_constant_function_has_zero_modulus():
    rep = H.check_inverse(H.polynomial_function([0.7]), W["constant"], 1.0, 1.0, 2, 2.0, [8, 16])
    assert all(r.lhs == 0.0 for r in rep.rows)


def test_inverse_all_doubling_and_a_star_cases():
    rep = H.check_inverse(C["abs_pow_1_5"], W["jacobi_right_half"], 1.0, 1.0, 2, 2.0, [8, 16, 32, 64])
    assert rep.passed
    rep0 = H.check_inverse(C["abs_pow_1_5"], W["constant"], 0.0, 0.0, 2, 2.0, [8, 16, 32, 64])
    assert rep0.passed
    for row in rep.rows:
        upper = float(row.witness.split("=")[1])
        assert upper >= row.rhs


def test_inverse_refuses_large_gamma():
    with pytest.raises(ParameterError):
        H.check_inverse(C["abs"], W["constant"], 1.0, 3.0, 1, 2.0, [8])


def test_equivalence_small_case():
    rep = H.check_equivalence(C["abs"], W["jacobi_right_half"], 1, math.inf, [8, 16])
    assert rep.passed
    chain = [r for r in rep.rows if r.witness.startswith("chain:")]
    assert chain and all(r.ratio <= 1 + 1e-9 for r in chain)


def test_rate_equivalence_cases():
    rep = H.check_rate_equivalence(C["abs_pow_1_5"], W["constant"], 2, 2.0, None, [8, 16, 32, 64, 128])
    assert abs(rep.metadata["alpha_E"] - rep.metadata["alpha_omega"]) <= 0.1
    sat = H.check_rate_equivalence(H.polynomial_function([0.1, 0.2, -0.3, 0.4]), W["constant"], 2, 2.0, None,
                                   [2, 3, 4, 5, 6, 8])
    assert sat.metadata["saturated"] and sat.verdict == "degenerate-pass"
    ana = H.check_rate_equivalence(C["sin_5x"], W["constant"], 2, 2.0, None, [8, 16, 32, 64, 128])
    assert ana.metadata["super_algebraic"]


def test_qn_and_class_checks_small():
    rep = H.check_qn(W["jacobi_right_half"], 2.0, [16, 32], grid_size=256)
    assert rep.passed
    cls = H.check_class(W["constant"], 1.0, 1.0, [4, 8, 16])
    assert cls.passed and cls.metadata["in_upsilon"]


def test_class_passes_flags_unbounded_constant():
    ok, a, b = H.class_passes(W["jacobi_right_09"], 0.0, 0.0)
    assert not ok and b > a
