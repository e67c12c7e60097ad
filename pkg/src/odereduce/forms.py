"""Matching normalized ODEs against the linearizable / reducible normal forms.

Coefficients are read off algebraically: the canonical right-hand side is
expanded as a polynomial in the top-minus-one derivative (and, for the Type I
and Type II shapes, the derivative below it) and each monomial coefficient is
checked to depend only on the form's two permitted variables.  Every match is
confirmed by re-expanding the template and zero-testing the difference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .kernel import (
    ZeroVerdict,
    canonicalize,
    diff,
    is_undefined,
    is_zero,
    jet,
    jet_name,
    names,
    to_text,
)
from .ode import NormalizedOde


class FormError(ValueError):
    pass


@dataclass(frozen=True)
class FormSpec:
    form_id: str
    variant: str
    order: int
    shape: str  # cubic | type1 | type2 | swap
    coeff_names: tuple[str, ...]
    # jet orders of the two permitted variables; None is the independent variable
    permitted: tuple[int | None, int | None]


_T1 = ("a1", "a0", "b3", "b2", "b1", "b0")
_T1_CAP = ("A1", "A0", "B3", "B2", "B1", "B0")
_T2 = ("r", "c2", "c1", "c0", "d5", "d4", "d3", "d2", "d1", "d0")
_T2_CAP = ("r0", "C2", "C1", "C0", "D5", "D4", "D3", "D2", "D1", "D0")

FORMS: dict[str, FormSpec] = {
    f.form_id: f
    for f in (
        FormSpec("lie-cubic-2", "Cubic2", 2, "cubic", ("a1", "a2", "a3", "a4"), (None, 0)),
        FormSpec("im-type1-3", "ThirdTypeI", 3, "type1", _T1, (None, 0)),
        FormSpec("im-type2-3", "ThirdTypeII", 3, "type2", _T2, (None, 0)),
        FormSpec("thm1-fourth-x", "FourthXTypeI", 4, "type1", _T1_CAP, (0, 1)),
        FormSpec("thm2-fourth-x", "FourthXTypeII", 4, "type2", _T2_CAP, (0, 1)),
        FormSpec("thm3-fourth-xy", "FourthXY", 4, "cubic", ("a", "b", "c", "d"), (1, 2)),
        FormSpec("type1-fourth-y", "ThirdTypeI", 4, "type1", _T1, (None, 1)),
        FormSpec("type2-fourth-y-form-only", "ThirdTypeII", 4, "type2", _T2, (None, 1)),
        FormSpec("swap-remark", "SwapForm", 4, "swap", ("f",), (None, 0)),
    )
}

FORM_IDS = tuple(FORMS)

# sign of each cubic coefficient in f = top: f = sum(sign * coeff * v^k)
_CUBIC_SIGNS = {
    "Cubic2": {"a1": (-1, 3), "a2": (1, 2), "a3": (-1, 1), "a4": (1, 0)},
    "FourthXY": {"a": (-1, 3), "b": (-1, 2), "c": (-1, 1), "d": (-1, 0)},
}


@dataclass(frozen=True)
class CoeffSet:
    form_id: str
    independent: str
    dependent: str
    coeffs: dict[str, sp.Expr] = field(hash=False)

    @property
    def spec(self) -> FormSpec:
        return FORMS[self.form_id]

    @property
    def variant(self) -> str:
        return self.spec.variant

    @property
    def variables(self) -> tuple[str, str]:
        return permitted_names(self.spec, self.independent, self.dependent)

    def __getitem__(self, name: str) -> sp.Expr:
        return self.coeffs[name]

    def text(self) -> dict[str, str]:
        return {k: to_text(v) for k, v in self.coeffs.items()}

    def to_dict(self) -> dict:
        return {
            "form": self.form_id,
            "variant": self.variant,
            "variables": list(self.variables),
            "coefficients": self.text(),
        }


@dataclass(frozen=True)
class NoMatch:
    form_id: str
    reason: str
    detail: str = ""
    coefficient: str | None = None
    residual: sp.Expr | None = None

    def to_dict(self) -> dict:
        out = {"form": self.form_id, "reason": self.reason, "detail": self.detail}
        if self.coefficient is not None:
            out["coefficient"] = self.coefficient
        if self.residual is not None:
            out["residual"] = to_text(self.residual)
        return out


def permitted_names(spec: FormSpec, independent: str, dependent: str) -> tuple[str, str]:
    return tuple(independent if k is None else jet_name(dependent, k) for k in spec.permitted)


def make_coeffs(form_id: str, independent: str = "x", dependent: str = "y", **values) -> CoeffSet:
    """CoeffSet with unspecified coefficients set to zero."""
    spec = FORMS[form_id]
    unknown = set(values) - set(spec.coeff_names)
    if unknown:
        raise FormError(f"{form_id} has no coefficient(s) {sorted(unknown)}")
    coeffs = {n: sp.sympify(values.get(n, 0)) for n in spec.coeff_names}
    return CoeffSet(form_id, independent, dependent, coeffs)


# -- templates ------------------------------------------------------------------

def _template_rhs(c: CoeffSet) -> sp.Expr:
    spec = c.spec
    n = spec.order
    v = jet(c.dependent, n - 1)
    w = jet(c.dependent, n - 2)
    k = c.coeffs
    if spec.shape == "cubic":
        signs = _CUBIC_SIGNS[spec.variant]
        return sum(s * k[name] * v**p for name, (s, p) in signs.items())
    if spec.shape == "type1":
        a1, a0, b3, b2, b1, b0 = (k[x] for x in spec.coeff_names)
        return -((a1 * w + a0) * v + b3 * w**3 + b2 * w**2 + b1 * w + b0)
    if spec.shape == "type2":
        r, c2, c1, c0, *ds = (k[x] for x in spec.coeff_names)
        bracket = -3 * v**2 + (c2 * w**2 + c1 * w + c0) * v
        bracket += sum(d * w ** (5 - i) for i, d in enumerate(ds))
        return -bracket / (w + r)
    y1, y2, y3 = (jet(c.dependent, i) for i in (1, 2, 3))
    return -k["f"] * y1**5 + 10 * y2 * y3 / y1 - 15 * y2**3 / y1**2


def _check_restriction(c: CoeffSet) -> None:
    allowed = set(c.variables)
    for name, value in c.coeffs.items():
        leaked = names(canonicalize(value)) - allowed
        if leaked:
            raise FormError(f"coefficient {name} mentions {sorted(leaked)}; allowed {sorted(allowed)}")


def expand_template(coeffs: CoeffSet) -> NormalizedOde:
    """The normalized ODE whose match under ``coeffs.form_id`` returns ``coeffs``."""
    _check_restriction(coeffs)
    spec = coeffs.spec
    if spec.shape == "type2":
        w = jet(coeffs.dependent, spec.order - 2)
        if canonicalize(w + coeffs.coeffs[spec.coeff_names[0]]) == 0:
            raise FormError("pole function cancels the second-from-top derivative")
    rhs = canonicalize(_template_rhs(coeffs))
    return NormalizedOde(coeffs.independent, coeffs.dependent, spec.order, rhs)


# -- extraction -----------------------------------------------------------------

class _Reject(Exception):
    def __init__(self, reason: str, detail: str = "", coefficient: str | None = None):
        super().__init__(detail)
        self.reason = reason
        self.detail = detail
        self.coefficient = coefficient


def _poly_coeffs(f: sp.Expr, gens: list[sp.Symbol]) -> dict[tuple[int, ...], sp.Expr]:
    c = canonicalize(f)
    if is_undefined(c):
        raise _Reject("undefined", "right-hand side is undefined")
    num, den = sp.fraction(c)
    bad = {g.name for g in gens} & names(den)
    if bad:
        raise _Reject("not-polynomial", f"denominator depends on {sorted(bad)}")
    try:
        poly = sp.Poly(sp.expand(num), *gens)
    except sp.PolynomialError as exc:
        raise _Reject("not-polynomial", str(exc)) from None
    return {m: canonicalize(coef / den) for m, coef in poly.terms()}


def _check_monomials(coeffs: dict, allowed: set, gens: list[sp.Symbol]) -> None:
    for m in coeffs:
        if m not in allowed:
            mono = "*".join(f"{g.name}^{p}" for g, p in zip(gens, m) if p) or "1"
            raise _Reject("degree-excess", f"monomial {mono} not allowed by the form")


def _extract(ode: NormalizedOde, spec: FormSpec) -> dict[str, sp.Expr]:
    n = spec.order
    v = jet(ode.dependent, n - 1)
    w = jet(ode.dependent, n - 2)
    f = ode.rhs
    if spec.shape == "cubic":
        poly = _poly_coeffs(f, [v])
        _check_monomials(poly, {(k,) for k in range(4)}, [v])
        signs = _CUBIC_SIGNS[spec.variant]
        return {name: canonicalize(s * poly.get((p,), 0)) for name, (s, p) in signs.items()}
    if spec.shape == "type1":
        poly = _poly_coeffs(f, [v, w])
        allowed = {(1, 1), (1, 0), (0, 3), (0, 2), (0, 1), (0, 0)}
        _check_monomials(poly, allowed, [v, w])
        return {
            name: canonicalize(-poly.get(m, 0))
            for name, m in zip(spec.coeff_names, [(1, 1), (1, 0), (0, 3), (0, 2), (0, 1), (0, 0)])
        }
    if spec.shape == "type2":
        try:
            r = recover_pole(ode, spec.form_id)
        except FormError as exc:
            raise _Reject("no-pole", str(exc)) from None
        bracket = canonicalize(-f * (w + r))
        poly = _poly_coeffs(bracket, [v, w])
        allowed = {(2, 0)} | {(1, k) for k in range(3)} | {(0, k) for k in range(6)}
        _check_monomials(poly, allowed, [v, w])
        if canonicalize(poly.get((2, 0), 0) + 3) != 0:
            raise _Reject("quadratic-coefficient", "coefficient of the squared top-minus-one derivative is not -3")
        out = {spec.coeff_names[0]: r}
        for i, name in enumerate(spec.coeff_names[1:4]):
            out[name] = poly.get((1, 2 - i), sp.Integer(0))
        for i, name in enumerate(spec.coeff_names[4:]):
            out[name] = poly.get((0, 5 - i), sp.Integer(0))
        return out
    raise AssertionError(spec.shape)


def match_form(
    ode: NormalizedOde, form_id: str, samples: int = 16, tol: float = 1e-8, seed: int = 0
) -> CoeffSet | NoMatch:
    if form_id not in FORMS:
        raise FormError(f"unknown form id {form_id!r}")
    spec = FORMS[form_id]
    if spec.shape == "swap":
        return match_swap_form(ode, samples=samples, tol=tol, seed=seed)
    if ode.order != spec.order:
        return NoMatch(form_id, "order", f"form needs order {spec.order}, got {ode.order}")
    try:
        raw = _extract(ode, spec)
    except _Reject as rej:
        return NoMatch(form_id, rej.reason, rej.detail, rej.coefficient)
    allowed = set(permitted_names(spec, ode.independent, ode.dependent))
    for name, value in raw.items():
        leaked = names(value) - allowed
        if leaked:
            return NoMatch(
                form_id, "variable-leakage", f"{name} mentions {sorted(leaked)}", coefficient=name
            )
    coeffs = CoeffSet(form_id, ode.independent, ode.dependent, raw)
    return _confirm(ode, coeffs, samples, tol, seed)


def _confirm(ode: NormalizedOde, coeffs: CoeffSet, samples: int, tol: float, seed: int) -> CoeffSet | NoMatch:
    residual = canonicalize(ode.rhs - _template_rhs(coeffs))
    verdict: ZeroVerdict = is_zero(residual, samples, tol, seed)
    if not verdict.is_zero:
        return NoMatch(coeffs.form_id, "residual", "template re-expansion differs", residual=residual)
    return coeffs


def recover_pole(ode: NormalizedOde, form_id: str | None = None) -> sp.Expr:
    """Pole function r (or r0) of a Type II right-hand side.

    The squared top-minus-one derivative carries coefficient 3/(w + r), so
    r = 3/c - w with c half the second derivative of f in that variable.
    """
    if ode.order not in (3, 4):
        raise FormError("pole recovery needs an ODE of order 3 or 4")
    if form_id is None:
        form_id = "im-type2-3" if ode.order == 3 else "thm2-fourth-x"
    spec = FORMS[form_id]
    v = jet_name(ode.dependent, ode.order - 1)
    w = jet(ode.dependent, ode.order - 2)
    c = canonicalize(diff(diff(ode.rhs, v), v) / 2)
    if c == 0 or is_undefined(c):
        raise FormError(f"no quadratic {v}-part; the form requires the -3 quadratic term")
    r = canonicalize(3 / c - w)
    leaked = names(r) - set(permitted_names(spec, ode.independent, ode.dependent))
    if leaked:
        raise FormError(f"pole function {to_text(r)} mentions {sorted(leaked)}")
    return r


def match_swap_form(
    ode: NormalizedOde, samples: int = 16, tol: float = 1e-8, seed: int = 0
) -> CoeffSet | NoMatch:
    """Accept y'''' = -f(x,y) y'^5 + 10 y''y'''/y' - 15 y''^3/y'^2 with f linear in x."""
    form_id = "swap-remark"
    if ode.order != 4:
        return NoMatch(form_id, "order", f"form needs order 4, got {ode.order}")
    y1, y2, y3 = (ode.jet(i) for i in (1, 2, 3))
    q = canonicalize((ode.rhs - 10 * y2 * y3 / y1 + 15 * y2**3 / y1**2) / (-(y1**5)))
    if is_undefined(q):
        return NoMatch(form_id, "undefined", "quotient is undefined")
    leaked = names(q) - {ode.independent, ode.dependent}
    if leaked:
        return NoMatch(form_id, "residual", f"quotient mentions {sorted(leaked)}", residual=q)
    num, den = sp.fraction(q)
    x = sp.Symbol(ode.independent)
    if x in den.free_symbols:
        return NoMatch(form_id, "not-linear", f"f is not polynomial in {ode.independent}", residual=q)
    try:
        deg = sp.Poly(sp.expand(num), x).degree()
    except sp.PolynomialError:
        return NoMatch(form_id, "not-linear", f"f is not polynomial in {ode.independent}", residual=q)
    if deg > 1:
        return NoMatch(form_id, "not-linear", f"f has degree {deg} in {ode.independent}", residual=q)
    coeffs = CoeffSet(form_id, ode.independent, ode.dependent, {"f": q})
    return _confirm(ode, coeffs, samples, tol, seed)
