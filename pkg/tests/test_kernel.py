import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from odereduce.kernel import (
    CyclicBindingError,
    EvaluationError,
    Verdict,
    canonicalize,
    diff,
    eval_at,
    is_undefined,
    is_zero,
    jet,
    names,
    substitute,
    to_text,
    total_diff,
    var,
)
from strategies import random_expr

x, y = var("x"), var("y")
y1, y2, y3, y4 = (jet("y", k) for k in range(1, 5))
u, u1, u2 = var("u"), jet("u", 1), jet("u", 2)

VARS = ["x", "y", "y'", "y''"]


def _corpus(n=100, seed=0):
    rng = np.random.default_rng(seed)
    return [random_expr(rng, VARS) for _ in range(n)]


def _points(rng, k=8):
    return [{v: float(rng.uniform(0.5, 1.5)) for v in VARS} for _ in range(k)]


# -- differentiation ---------------------------------------------------------------

def test_diff_power_rule():
    assert diff(y1**2, "y'") == 2 * y1


def test_diff_example2_coefficient():
    # A0 = -3y'/y; its y'-derivative enters the first Theorem-1 condition
    assert canonicalize(diff(-3 * y1 / y, "y'") - (-3 / y)) == 0


def test_diff_exp_cos_matches_finite_difference():
    e = sp.exp(2 * y) * sp.cos(sp.sqrt(2) * y)
    d = diff(e, "y")
    expected = 2 * sp.exp(2 * y) * sp.cos(sp.sqrt(2) * y) - sp.sqrt(2) * sp.exp(2 * y) * sp.sin(sp.sqrt(2) * y)
    assert canonicalize(d - expected) == 0
    h = 1e-6
    for y0 in (0.3, 0.7, 1.1):
        fd = (eval_at(e, {"y": y0 + h}) - eval_at(e, {"y": y0 - h})) / (2 * h)
        assert fd == pytest.approx(eval_at(d, {"y": y0}), rel=1e-6)


def test_diff_of_constant_is_zero():
    assert diff(sp.Integer(7), "y") == 0


def test_total_diff_examples():
    assert total_diff(y, "y", "x", 4) == y1
    assert canonicalize(total_diff(y2 / y1, "y", "x", 4) - (y3 / y1 - y2**2 / y1**2)) == 0
    assert canonicalize(total_diff(x * y1, "y", "x", 4) - (y1 + x * y2)) == 0


def test_total_diff_rejects_top_order():
    with pytest.raises(ValueError):
        total_diff(y4, "y", "x", 4)


def test_total_diff_matches_trajectory_differencing():
    # along y = sin(x): e = x*y'*y^2 pushed through the trajectory, differenced numerically
    e = x * y1 * y**2
    d = total_diff(e, "y", "x", 4)

    def along(t):
        return {"x": t, "y": math.sin(t), "y'": math.cos(t), "y''": -math.sin(t)}

    for t in (0.2, 0.9):
        errs = []
        for h in (1e-2, 5e-3):
            fd = (eval_at(e, along(t + h)) - eval_at(e, along(t - h))) / (2 * h)
            errs.append(abs(fd - eval_at(d, along(t))))
        assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)


# -- substitution ------------------------------------------------------------------

def test_substitute_examples():
    image = u**2 * u2 + u * u1**2
    assert substitute(y3, {"y'''": image}) == image
    assert substitute(y1 + 1, {}) == y1 + 1
    assert sp.expand(substitute(y2**2, {"y''": u * u1})) == u**2 * u1**2


def test_substitute_is_simultaneous():
    assert substitute(y * y1, {"y": u, "y'": u1}) == u * u1
    with pytest.raises(CyclicBindingError):
        substitute(y + y1, {"y": y1, "y'": y})


def test_substitute_leaves_unbound_variables():
    assert substitute(x + y, {"y": sp.Integer(3)}) == x + 3


# -- canonical form ----------------------------------------------------------------

def test_canonicalize_examples():
    assert canonicalize((y1**2 - 1) / (y1 - 1)) == y1 + 1
    assert canonicalize(3 / y2 - 3 / y2) == 0
    # fourth Theorem-1 condition at Example 1 coefficients: 4 + 1 - 5
    A1 = -1 / y1
    cond4 = y1**2 * (3 * diff(A1, "y'") - 0 + A1**2) - y1 * A1 - 5
    assert canonicalize(cond4) == 0


def test_canonicalize_division_by_zero_is_flagged():
    assert is_undefined(canonicalize(sp.Integer(1) / (y1 - y1)))


def test_canonicalize_idempotent_on_corpus():
    for e in _corpus():
        c = canonicalize(e)
        assert canonicalize(c) == c


def test_canonicalize_agrees_numerically():
    rng = np.random.default_rng(1)
    for e in _corpus():
        c = canonicalize(e)
        for p in _points(rng):
            try:
                a, b = eval_at(e, p), eval_at(c, p)
            except EvaluationError:
                continue
            assert abs(a - b) <= 1e-9 * (1 + abs(a))


def test_diff_against_central_differences():
    rng = np.random.default_rng(2)
    h = 1e-6
    for e in _corpus():
        v = VARS[int(rng.integers(len(VARS)))]
        d = diff(e, v)
        for p in _points(rng):
            up, dn = dict(p), dict(p)
            up[v] += h
            dn[v] -= h
            try:
                fd = (eval_at(e, up) - eval_at(e, dn)) / (2 * h)
                exact = eval_at(d, p)
            except EvaluationError:
                continue
            assert abs(fd - exact) <= 1e-5 * max(1.0, abs(exact))


@settings(max_examples=40, deadline=None)
@given(
    st.fractions(min_value=-5, max_value=5, max_denominator=7),
    st.fractions(min_value=-5, max_value=5, max_denominator=7),
    st.integers(0, 10_000),
)
def test_diff_is_linear(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    e1, e2 = random_expr(rng, VARS), random_expr(rng, VARS)
    a, b = sp.Rational(alpha.numerator, alpha.denominator), sp.Rational(beta.numerator, beta.denominator)
    lhs = diff(a * e1 + b * e2, "y'")
    rhs = a * diff(e1, "y'") + b * diff(e2, "y'")
    assert is_zero(lhs - rhs).kind is Verdict.PROVEN_ZERO


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_canonicalize_idempotent_property(seed):
    e = random_expr(np.random.default_rng(seed), VARS)
    c = canonicalize(e)
    assert canonicalize(c) == c


# -- evaluation --------------------------------------------------------------------

def test_eval_examples():
    assert eval_at(y1**2, {"y'": 3}) == 9
    assert eval_at(6 * y1**2 - 4 / y1, {"y'": 2}) == 22


def test_eval_pole_raises_with_subexpression():
    with pytest.raises(EvaluationError) as info:
        eval_at(1 / y1, {"y'": 0})
    assert info.value.subexpr == y1


def test_eval_domain_errors():
    with pytest.raises(EvaluationError):
        eval_at(sp.log(y), {"y": -1})
    with pytest.raises(EvaluationError):
        eval_at(sp.sqrt(y), {"y": -1})
    with pytest.raises(EvaluationError):
        eval_at(y, {})


# -- zero testing ------------------------------------------------------------------

def test_is_zero_of_zero_is_proven():
    assert is_zero(sp.Integer(0)).kind is Verdict.PROVEN_ZERO


def test_is_zero_constant_minus_five():
    v = is_zero(sp.Integer(-5))
    assert v.kind is Verdict.NONZERO
    assert v.value == -5


def test_is_zero_witness_reproduces():
    e = y1**2 - y1 + 1 / y
    v = is_zero(e, seed=3)
    assert v.kind is Verdict.NONZERO
    assert abs(eval_at(e, v.witness)) > 1e-8


def test_is_zero_theorem1_condition5_example2():
    A1, A0 = -10 / y1, -3 * y1 / y
    B1, B0 = 3 * y1**2 / y**2, sp.Integer(0)
    d = lambda e, *w: sp.diff(e, *w)  # noqa: E731
    c5 = (
        y1**4 * (-6 * d(A0, y) * d(A1, y))
        + y1**3 * (9 * B1 * d(A1, y) - 2 * A0**2 * d(A1, y) + 9 * d(B1, y, y1))
        + y1**2 * (-18 * d(B1, y) - 9 * A1 * d(B0, y1) - 9 * B0 * d(A1, y1) + 3 * A0 * d(B1, y1)
                   - 27 * d(B0, y1, y1))
        + y1 * (27 * A1 * B0 - 6 * A0 * B1 + 126 * d(B0, y1))
        - 180 * B0
    )
    assert is_zero(c5).kind is Verdict.PROVEN_ZERO


def test_is_zero_function_identity_is_proven_or_probable():
    assert is_zero(sp.exp(2 * y) - sp.exp(y) ** 2).is_zero
    v = is_zero(sp.sin(y) ** 2 + sp.cos(y) ** 2 - 1)
    assert v.kind is Verdict.PROBABLY_ZERO
    assert v.samples == 16


def test_is_zero_indeterminate_when_always_singular():
    # ln of a quantity that is never positive on the sampling box
    v = is_zero(sp.log(-(y**2)) + 1)
    assert v.kind is Verdict.INDETERMINATE


def test_is_zero_rejects_zero_samples():
    with pytest.raises(ValueError):
        is_zero(y, samples=0)


def test_is_zero_deterministic_given_seed():
    e = sp.sin(y) * y1 - y1 * sp.sin(y) + 1e-3 * y
    assert is_zero(e, seed=5) == is_zero(e, seed=5)


# -- printing ----------------------------------------------------------------------

def test_to_text_uses_grammar_tokens():
    text = to_text(3 * y1**2 / y + sp.log(y))
    assert "^" in text and "**" not in text and "ln(" in text


def test_names_reports_jets():
    assert names(y1 * y3 + x) == {"x", "y'", "y'''"}
