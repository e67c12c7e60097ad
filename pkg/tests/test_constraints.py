import pytest
import sympy as sp

from odereduce.constraints import (
    TOKEN_READINGS,
    TRESSE_SIGN_NOTE,
    compute_H,
    evaluate_constraints,
    theorem1_conditions,
)
from odereduce.forms import CoeffSet, make_coeffs, match_form
from odereduce.kernel import Verdict, canonicalize, jet, total_diff, var
from odereduce.ode import load_ode, solve_for_top
from strategies import ODE_TEXT

x, y = var("x"), var("y")
y1, y2 = jet("y", 1), jet("y", 2)

B0_TYPO = "y'*y'''' - y''*y''' - 3*y'^2*y''' + 2*y'^3*y'' + 3*y'^6 = 0"


def conditions(text, form_id):
    c = match_form(load_ode(text), form_id)
    assert isinstance(c, CoeffSet), c
    return evaluate_constraints(c)


def pullback_of_free_particle(T, U):
    """y'' = f(x, y, y') obtained from u''(t) = 0 under t = T(x, y), u = U(x, y)."""
    dT = total_diff(T, "y", "x", 2)
    ut = total_diff(U, "y", "x", 2) / dT
    utt = total_diff(ut, "y", "x", 2) / dT
    return solve_for_top(sp.numer(sp.together(utt)), "y", "x")


# -- Tresse ------------------------------------------------------------------------

@pytest.mark.parametrize(
    "T, U",
    [(x, sp.exp(y)), (x, y**2 + x), (x + y, x * y), (x * y, y)],
)
def test_tresse_accepts_pullbacks_of_free_particle(T, U):
    ode = pullback_of_free_particle(T, U)
    c = match_form(ode, "lie-cubic-2")
    assert isinstance(c, CoeffSet), c
    report = evaluate_constraints(c)
    assert report.passed, [x.to_dict() for x in report.conditions]


def test_tresse_rejects_nonlinearizable():
    report = conditions("y'' = y^2", "lie-cubic-2")
    assert not report.passed
    assert report["tresse-2"].verdict.kind is Verdict.NONZERO


def test_tresse_constant_coefficients_of_example4_reduction():
    report = evaluate_constraints(make_coeffs("lie-cubic-2", a1=1, a2=0, a3=-1, a4=0))
    assert [c.verdict.kind for c in report.conditions] == [Verdict.PROVEN_ZERO] * 2
    assert TRESSE_SIGN_NOTE in report.provenance


# -- Theorem 1 ---------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2])
def test_theorem1_examples_proven(n):
    # normalization divides Example 1 by its leading y', giving B0 = 3y'^4
    report = conditions(ODE_TEXT[n], "thm1-fourth-x")
    assert report.system == "theorem-1"
    assert all(c.verdict.kind is Verdict.PROVEN_ZERO for c in report.conditions)


def test_theorem1_fourth_condition_on_trivial_ode_is_minus_five():
    report = conditions("y'''' = 0", "thm1-fourth-x")
    assert not report.passed
    assert report["thm1-4"].residual == -5
    assert report["thm1-4"].verdict.value == -5


def test_theorem1_rejects_b0_typo():
    report = conditions(B0_TYPO, "thm1-fourth-x")
    assert not report.passed
    assert report["thm1-5"].verdict.kind is Verdict.NONZERO


def test_theorem1_independent_of_b1_scale():
    # conditions 2 and 5 are blind to B1 = k*y'^2 when the other coefficients are those of Example 1
    base = dict(A1=-1 / y1, A0=-3 * y1, B0=3 * y1**4)
    for k in (2, 3, 7):
        assert theorem1_conditions(make_coeffs("thm1-fourth-x", B1=k * y1**2, **base)).passed


# -- Theorem 2 ---------------------------------------------------------------------

def test_theorem2_example3_all_proven():
    report = conditions(ODE_TEXT[3], "thm2-fourth-x")
    assert [c.condition_id for c in report.conditions] == [f"c{i}" for i in range(1, 9)]
    assert all(c.verdict.kind is Verdict.PROVEN_ZERO for c in report.conditions)
    for reading in TOKEN_READINGS:
        assert reading in report.provenance


def test_compute_H_example3():
    c = match_form(load_ode(ODE_TEXT[3]), "thm2-fourth-x")
    H = compute_H(c)
    assert canonicalize(H - (32 * y1**6 - 24 * y1**3 + 22 - 28 / y1**3)) == 0


def test_compute_H_pure_constant_part():
    # with every coefficient zero only the 40/(27 p^3) term survives
    H = compute_H(make_coeffs("thm2-fourth-x"))
    assert canonicalize(H - sp.Rational(40, 27) / y1**3) == 0


# -- Theorem 3 ---------------------------------------------------------------------

def test_theorem3_example4_printed_first_condition_residual():
    report = conditions(ODE_TEXT[4], "thm3-fourth-xy")
    assert canonicalize(report["thm3-1"].residual - 4 * y2) == 0
    assert report["thm3-2"].verdict.kind is Verdict.PROVEN_ZERO
    assert not report.passed


# -- dispatch ----------------------------------------------------------------------

def test_type2_third_order_is_unsupported():
    report = evaluate_constraints(make_coeffs("im-type2-3", d5=1))
    assert not report.supported and not report.passed
    assert report.to_dict()["verdict"] == "unsupported"


def test_type1_third_order_linear_passes():
    assert conditions("y''' = x*y", "im-type1-3").passed


def test_swap_form_has_no_extra_conditions():
    report = evaluate_constraints(make_coeffs("swap-remark", f=x + y))
    assert report.passed and report.conditions == []
