"""Order-reducing changes of variables and their inversion recipes.

Each method rewrites the source jets through the chain rule:

    missing-y   u(x)  = y'        d/dx = D_x
    missing-x   u(y)  = y'        d/dx = u D_y
    missing-xy  u(y') = y''       d/dx = u D_{y'}
    swap        x(y)              d/dx = (1/x') D_y

The images are produced by repeated total differentiation, never typed in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .forms import CoeffSet, NoMatch, expand_template, match_form, match_swap_form
from .kernel import (
    ZeroVerdict,
    canonicalize,
    diff,
    is_zero,
    jet,
    jet_name,
    names,
    substitute,
    to_text,
    total_diff,
    var,
)
from .ode import NormalizedOde, dependency_scan, solve_for_top

METHODS = ("swap", "missing-xy", "missing-x", "missing-y")
REDUCED = "u"


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class ReductionTrace:
    method: str
    source: NormalizedOde
    dictionary: dict[str, sp.Expr]  # source jet name -> expression in reduced jets
    inverse: dict[str, sp.Expr]  # reduced variable name -> expression in source jets
    reduced: NormalizedOde
    divisor: sp.Expr
    recipe: list[str]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "source": self.source.text(),
            "substitution": {k: to_text(v) for k, v in self.dictionary.items()},
            "reduced": self.reduced.text(),
            "reduced_independent": self.reduced.independent,
            "reduced_dependent": self.reduced.dependent,
            "divisor": to_text(self.divisor),
            "recipe": list(self.recipe),
            "warnings": list(self.warnings),
        }


def _chain_images(
    source: NormalizedOde, first: int, seed_image: sp.Expr, factor: sp.Expr, dep: str, indep: str, top: int
) -> dict[str, sp.Expr]:
    """Images of source jets first..top, each = factor * D(previous image)."""
    images = {jet_name(source.dependent, first): seed_image}
    current = seed_image
    for k in range(first + 1, top + 1):
        current = sp.expand(factor * total_diff(current, dep, indep, max_order=top + 1))
        images[jet_name(source.dependent, k)] = current
    return images


def _invert(dictionary: dict[str, sp.Expr], reduced: NormalizedOde, fixed: dict[str, sp.Expr]) -> dict[str, sp.Expr]:
    """Solve the dictionary for the reduced jets, lowest order first.

    Every image is linear in the highest reduced jet it mentions.
    """
    inverse = dict(fixed)
    for src, image in dictionary.items():
        unknown = [n for n in names(image) if n not in inverse and n != reduced.independent]
        if not unknown:
            continue
        if len(unknown) != 1:
            raise ReductionError(f"image of {src} introduces several new variables {sorted(unknown)}")
        z = unknown[0]
        coef = diff(image, z)
        if z in names(canonicalize(coef)):
            raise ReductionError(f"image of {src} is not linear in {z}")
        rest = sp.expand(image - coef * var(z))
        solved = (var(src) - rest) / coef
        inverse[z] = canonicalize(substitute(solved, inverse))
    return inverse


def _finish(method, source, dictionary, red_indep, red_dep, min_order, fixed, recipe, warnings=()):
    f = substitute(source.rhs, dictionary)
    top_image = dictionary[jet_name(source.dependent, source.order)]
    reduced = solve_for_top(top_image - f, red_dep, red_indep, min_order=min_order)
    inverse = _invert(dictionary, reduced, fixed)
    return ReductionTrace(
        method, source, dictionary, inverse, reduced, reduced.leading, list(recipe), list(warnings)
    )


def reduce_missing_y(ode: NormalizedOde) -> ReductionTrace:
    if ode.order not in (3, 4):
        raise ReductionError("missing-y reduction needs order 3 or 4")
    if dependency_scan(ode).uses_dependent:
        raise ReductionError(f"right-hand side depends on {ode.dependent}")
    n = ode.order
    u = jet(REDUCED, 0)
    dictionary = _chain_images(ode, 1, u, sp.Integer(1), REDUCED, ode.independent, n)
    recipe = [
        f"solve the reduced order-{n - 1} ODE for u({ode.independent}) = {jet_name(ode.dependent, 1)}",
        f"{ode.dependent} = integral of u d{ode.independent} + c",
    ]
    return _finish(
        "missing-y", ode, dictionary, ode.independent, REDUCED, n - 1,
        {ode.independent: var(ode.independent)}, recipe,
    )


def reduce_missing_x(ode: NormalizedOde) -> ReductionTrace:
    if ode.order not in (3, 4):
        raise ReductionError("missing-x reduction needs order 3 or 4")
    if dependency_scan(ode).uses_independent:
        raise ReductionError(f"right-hand side depends on {ode.independent}")
    n = ode.order
    u = jet(REDUCED, 0)
    dictionary = _chain_images(ode, 1, u, u, REDUCED, ode.dependent, n)
    recipe = [
        f"solve the reduced order-{n - 1} ODE for u({ode.dependent}) = {jet_name(ode.dependent, 1)}",
        f"{ode.independent} = integral of d{ode.dependent}/u({ode.dependent}) + c, on arcs with u != 0",
    ]
    warnings = [f"u = {jet_name(ode.dependent, 1)} must be nonzero on solution arcs"]
    return _finish(
        "missing-x", ode, dictionary, ode.dependent, REDUCED, n - 1,
        {ode.dependent: var(ode.dependent)}, recipe, warnings,
    )


def reduce_missing_xy(ode: NormalizedOde) -> ReductionTrace:
    if ode.order != 4:
        raise ReductionError("missing-xy reduction needs order 4")
    prof = dependency_scan(ode)
    if prof.uses_independent or prof.uses_dependent:
        raise ReductionError(f"right-hand side depends on {ode.independent} or {ode.dependent}")
    p = jet_name(ode.dependent, 1)
    u = jet(REDUCED, 0)
    dictionary = _chain_images(ode, 2, u, u, REDUCED, p, 4)
    recipe = [
        f"solve the reduced second-order ODE for u({p}) = {jet_name(ode.dependent, 2)}",
        f"with p = {p}: {ode.independent} = integral of dp/u(p) + c",
        f"{ode.dependent} = integral of p d{ode.independent} + c",
    ]
    warnings = [f"u = {jet_name(ode.dependent, 2)} must be nonzero on solution arcs"]
    return _finish("missing-xy", ode, dictionary, p, REDUCED, 2, {p: var(p)}, recipe, warnings)


def swap_variables(ode: NormalizedOde) -> ReductionTrace:
    """Exchange dependent and independent variables for the swap form."""
    m = match_swap_form(ode)
    if isinstance(m, NoMatch):
        raise ReductionError(f"swap form does not match: {m.reason} {m.detail}".strip())
    x, y = ode.independent, ode.dependent
    x1 = jet(x, 1)
    dictionary = _chain_images(ode, 1, 1 / x1, 1 / x1, x, y, 4)
    recipe = [
        f"solve the linear ODE {jet_name(x, 4)}({y}) = {to_text(m['f'])}",
        f"invert {x}({y}) on monotone branches to recover {y}({x})",
    ]
    fixed = {y: var(y), x: var(x), jet_name(x, 1): 1 / jet(y, 1)}
    return _finish("swap", ode, dictionary, y, x, 4, fixed, recipe)


REDUCERS = {
    "missing-y": reduce_missing_y,
    "missing-x": reduce_missing_x,
    "missing-xy": reduce_missing_xy,
    "swap": swap_variables,
}


def reduce(ode: NormalizedOde, method: str) -> ReductionTrace:
    try:
        return REDUCERS[method](ode)
    except KeyError:
        raise ReductionError(f"unknown method {method!r}") from None


def plan(ode: NormalizedOde) -> list[str]:
    """Applicable methods in priority order: swap, missing-xy, missing-x, missing-y."""
    prof = dependency_scan(ode)
    out = []
    if ode.order == 4 and isinstance(match_swap_form(ode), CoeffSet):
        out.append("swap")
    if ode.order == 4 and not prof.uses_independent and not prof.uses_dependent:
        out.append("missing-xy")
    if ode.order in (3, 4) and not prof.uses_independent:
        out.append("missing-x")
    if ode.order in (3, 4) and not prof.uses_dependent:
        out.append("missing-y")
    return out


# -- identification maps --------------------------------------------------------

@dataclass(frozen=True)
class IdentificationOutcome:
    form_id: str
    printed: dict[str, sp.Expr]
    semantic: dict[str, sp.Expr] | None
    agreement: dict[str, ZeroVerdict]
    note: str = ""

    @property
    def agrees(self) -> bool:
        return bool(self.agreement) and all(v.is_zero for v in self.agreement.values())

    @property
    def disagreeing(self) -> list[str]:
        return [k for k, v in self.agreement.items() if not v.is_zero]

    def to_dict(self) -> dict:
        return {
            "form": self.form_id,
            "printed_map": {k: to_text(v) for k, v in self.printed.items()},
            "semantic": None if self.semantic is None else {k: to_text(v) for k, v in self.semantic.items()},
            "agreement": {k: v.to_dict() for k, v in self.agreement.items()},
            "disagreeing": self.disagreeing,
            "note": self.note,
        }


def printed_identification(coeffs: CoeffSet) -> dict[str, sp.Expr]:
    """Lowercase reduced coefficients per the published maps, with y' -> u."""
    p = var(jet_name(coeffs.dependent, 1))
    k = coeffs.coeffs
    if coeffs.variant == "FourthXTypeI":
        A1, A0, B3, B2, B1, B0 = (k[n] for n in ("A1", "A0", "B3", "B2", "B1", "B0"))
        out = {
            "a1": A1 + 4 / p,
            "a0": A0 / p,
            "b3": B3 + A1 / p + 1 / p**2,
            "b2": B2 / p + A0 / p**2,
            "b1": B1 / p**2,
            "b0": B0 / p**3,
        }
    elif coeffs.variant == "FourthXTypeII":
        r0, C2, C1, C0 = (k[n] for n in ("r0", "C2", "C1", "C0"))
        D5, D4, D3, D2, D1, D0 = (k[n] for n in ("D5", "D4", "D3", "D2", "D1", "D0"))
        out = {
            "r": r0 / p,
            "c2": C2 - 2 / p,
            "c1": C1 + 4 * r0 / p,
            "c0": C0 / p**2,
            "d5": D5 / p**5,
            "d4": D4 + C2 / p - 2 / p**2,
            "d3": D3 / p + C1 / p + 4 * r0 / p**2 - 3 * r0 / p**3,
            "d2": D2 / p**2 + C0 / p**3,
            "d1": D1 / p**3,
            "d0": D0 / p**4,
        }
    else:
        raise ValueError(f"no identification map for variant {coeffs.variant}")
    u = var(REDUCED)
    return {n: canonicalize(substitute(e, {p: u})) for n, e in out.items()}


def identify_coeffs(coeffs: CoeffSet, samples: int = 16, tol: float = 1e-8, seed: int = 0) -> IdentificationOutcome:
    """Printed identification map versus direct substitution, per coefficient."""
    printed = printed_identification(coeffs)
    target = "im-type1-3" if coeffs.variant == "FourthXTypeI" else "im-type2-3"
    trace = reduce_missing_x(expand_template(coeffs))
    m = match_form(trace.reduced, target, samples=samples, tol=tol, seed=seed)
    if isinstance(m, NoMatch):
        return IdentificationOutcome(
            coeffs.form_id, printed, None, {}, note=f"reduced equation does not match {target}: {m.reason}"
        )
    semantic = dict(m.coeffs)
    agreement = {n: is_zero(printed[n] - semantic[n], samples, tol, seed) for n in printed}
    return IdentificationOutcome(coeffs.form_id, printed, semantic, agreement)
