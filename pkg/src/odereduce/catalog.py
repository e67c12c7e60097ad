"""Built-in worked examples with their published data and known corrections.

Each entry keeps the equation as published next to the corrected text the
pipeline runs on, so reports can show both.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .grammar import parse_equation
from .kernel import canonicalize, is_zero
from .ode import NormalizedOde, load_ode


@dataclass(frozen=True)
class Discrepancy:
    flag: str
    summary: str

    def to_dict(self) -> dict:
        return {"flag": self.flag, "summary": self.summary}


@dataclass(frozen=True)
class SolutionFamily:
    target: str  # source | reduced | published-reduced
    expression: str
    constants: tuple[str, ...]
    implicit: bool = False
    published: str | None = None  # as printed, when it differs from ``expression``


@dataclass(frozen=True)
class Example:
    number: int
    published_text: str
    form_id: str
    published_coeffs: dict[str, str]
    method: str
    published_reduced: str
    reduced_dependent: str
    reduced_independent: str
    solution: SolutionFamily
    initial: tuple[float, ...]
    h: float = 1e-3
    steps: int = 500
    corrected_text: str | None = None
    corrected_coeffs: dict[str, str] = field(default_factory=dict)
    discrepancies: tuple[Discrepancy, ...] = ()

    @property
    def text(self) -> str:
        return self.corrected_text or self.published_text

    def ode(self) -> NormalizedOde:
        return load_ode(self.text)

    def expected_coeffs(self) -> dict[str, sp.Expr]:
        merged = {**self.published_coeffs, **self.corrected_coeffs}
        return {k: parse_equation(v)[0] for k, v in merged.items()}

    def published_reduced_ode(self) -> NormalizedOde:
        return load_ode(self.published_reduced, self.reduced_dependent, self.reduced_independent)

    def solution_expr(self, published: bool = False) -> sp.Expr:
        text = self.solution.published if published and self.solution.published else self.solution.expression
        consts = self.solution.constants
        if self.solution.target == "source":
            return parse_equation(text, constants=consts)[0]
        return parse_equation(text, self.reduced_dependent, self.reduced_independent, consts)[0]


TRESSE_SIGNS = Discrepancy(
    "tresse-sign-convention",
    "the two second-order linearization conditions hold for the all-plus cubic "
    "y''+a1*y'^3+a2*y'^2+a3*y'+a4=0; coefficients stored in the alternating-sign "
    "convention are mapped a2->-a2, a4->-a4 before evaluation",
)

EXAMPLES: dict[int, Example] = {
    1: Example(
        number=1,
        published_text="y'*y'''' - y''*y''' - 3*y'^2*y''' + 2*y'^3*y'' + 3*y'^5 = 0",
        form_id="thm1-fourth-x",
        published_coeffs={
            "A1": "-1/y'", "A0": "-3*y'", "B3": "0", "B2": "0", "B1": "2*y'^2", "B0": "3*y'^5",
        },
        corrected_coeffs={"B0": "3*y'^4"},
        method="missing-x",
        published_reduced="u''' + 3/u*u'*u'' - 3*u'' - 3/u*u'^2 + 2*u' + 3*u = 0",
        reduced_dependent="u",
        reduced_independent="y",
        solution=SolutionFamily(
            "reduced",
            "sqrt(c1*exp(-y) + exp(2*y)*(c2*cos(sqrt(2)*y) + c3*sin(sqrt(2)*y)))",
            ("c1", "c2", "c3"),
        ),
        initial=(0.0, 1.0, 1.0, 0.0),
        discrepancies=(
            Discrepancy(
                "ex1-b0",
                "listed B0 = 3*y'^5; dividing by the leading y' gives B0 = 3*y'^4, "
                "which is also what the stated conditions and reduced equation require",
            ),
            Discrepancy(
                "ex1-linear-target",
                "stated linear target s''' - 2*s/t^3 = 0 is not solved by the stated s(t); "
                "the consistent target under t=exp(y), s=u^2 is s''' + 6*s/t^3 = 0",
            ),
        ),
    ),
    2: Example(
        number=2,
        published_text=(
            "y^2*y'^2*y'''' - 10*y^2*y'*y''*y''' - 3*y*y'^3*y''' + 15*y^2*y''^3"
            " + 9*y*y'^2*y''^2 + 3*y'^4*y'' = 0"
        ),
        form_id="thm1-fourth-x",
        published_coeffs={
            "A1": "-10/y'", "A0": "-3*y'/y", "B3": "15/y'^2", "B2": "9/y", "B1": "3*y'^2/y^2", "B0": "0",
        },
        method="missing-x",
        published_reduced=(
            "y^2*u^2*u''' - 3*y*u^2*u'' - 6*y^2*u*u'*u'' + 3*u^2*u' + 6*y*u*u'^2 + 6*y^2*u'^3 = 0"
        ),
        reduced_dependent="u",
        reduced_independent="y",
        solution=SolutionFamily("source", "c1*y^5 + c2*y^3 + c3*y + c4", ("c1", "c2", "c3", "c4"), implicit=True),
        initial=(1.0, 1.0, 0.0, 0.0),
    ),
    3: Example(
        number=3,
        published_text="y'*y''*y'''' - 3*y'*y'''^2 + 6*y'^3*y''^2*y''' - 4*y''^2*y''' - y'*y''^5 = 0",
        form_id="thm2-fourth-x",
        published_coeffs={
            "r0": "0", "C2": "6*y'^2 - 4/y'", "C1": "0", "C0": "0",
            "D5": "-1", "D4": "0", "D3": "0", "D2": "0", "D1": "0", "D0": "0",
        },
        method="missing-x",
        published_reduced="u''' + (1/u')*(-3*u''^2 - y*u'^5) = 0",
        reduced_dependent="u",
        reduced_independent="y",
        solution=SolutionFamily(
            "published-reduced",
            "c1*exp(-u) + c2*exp(u/2)*cos(sqrt(3)/2*u) + c3*exp(u/2)*sin(sqrt(3)/2*u)",
            ("c1", "c2", "c3"),
            implicit=True,
            published="c1*exp(-u) + c2*exp(u/2)*cos(u) + c3*exp(u/2)*sin(u)",
        ),
        initial=(0.0, 1.0, 1.0, 0.0),
        discrepancies=(
            Discrepancy(
                "ex3-reduced-equation",
                "stated reduced equation u''' + (1/u')*(-3*u''^2 - y*u'^5) = 0 does not follow "
                "from the ODE under y'=u(y); direct substitution gives "
                "u''' + (1/u')*(-3*u''^2 + (6*u^2 - 6/u)*u'^2*u'' + (6*u - 6/u^2)*u'^4 - u*u'^5) = 0",
            ),
            Discrepancy(
                "ex3-identification-d5",
                "the Type II identification map gives d5 = D5/u^5 = -1/u^5, "
                "direct substitution gives d5 = -u",
            ),
            Discrepancy(
                "ex3-solution-frequency",
                "the roots of m^3 + 1 = 0 are -1 and 1/2 +- i*sqrt(3)/2, so the oscillating "
                "terms of the solution of s''' + s = 0 carry cos(sqrt(3)*t/2), sin(sqrt(3)*t/2), not cos(t), sin(t)",
            ),
        ),
    ),
    4: Example(
        number=4,
        published_text="y''*y'''' + y'''^3 - y'''^2 - y''*y'''",
        corrected_text="y''*y'''' + y'''^3 - y'''^2 - y''^2*y''' = 0",
        form_id="thm3-fourth-xy",
        published_coeffs={"a": "1/y''", "b": "-1/y''", "c": "-y''", "d": "0"},
        method="missing-xy",
        published_reduced="u'' + u'^3 - u' = 0",
        reduced_dependent="u",
        reduced_independent="y'",
        solution=SolutionFamily("reduced", "ln(c1*exp(-u) + c2*exp(u))", ("c1", "c2"), implicit=True),
        initial=(0.0, 0.0, 1.0, 0.5),
        discrepancies=(
            Discrepancy(
                "ex4-ode",
                "as printed the last term is -y''*y''' (and no '= 0'); the stated coefficients "
                "c = -y'' and the reduced equation u'' + u'^3 - u' = 0 require -y''^2*y'''",
            ),
            Discrepancy(
                "ex4-thm3-condition1",
                "the first printed condition for the y'/y''-form leaves residual 4*y'' on this "
                "example; the conditions rederived from the reduced second-order equation vanish",
            ),
        ),
    ),
}


def lookup(ode: NormalizedOde) -> Example | None:
    """The built-in example whose published or corrected ODE equals ``ode``."""
    if ode.dependent != "y" or ode.independent != "x":
        return None
    for ex in EXAMPLES.values():
        texts = {ex.published_text, ex.text}
        for text in texts:
            other = load_ode(text)
            if other.order == ode.order and canonicalize(other.rhs - ode.rhs) == 0:
                return ex
    return None


def compare(computed: sp.Expr, published: sp.Expr, seed: int = 0) -> bool:
    return is_zero(computed - published, seed=seed).is_zero
