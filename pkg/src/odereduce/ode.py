"""ODEs over jet variables: parsing, normalization and dependency scanning."""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .grammar import parse_equation
from .kernel import canonicalize, diff, jet, jet_name, jet_order, names, to_text


class NormalizeError(ValueError):
    pass


@dataclass(frozen=True)
class Equation:
    lhs: sp.Expr
    rhs: sp.Expr
    dependent: str = "y"
    independent: str = "x"

    @property
    def zero_form(self) -> sp.Expr:
        return self.lhs - self.rhs


@dataclass(frozen=True)
class NormalizedOde:
    """``dependent^(order) = rhs`` with rhs free of derivatives of order >= order."""

    independent: str
    dependent: str
    order: int
    rhs: sp.Expr
    leading: sp.Expr = field(default=sp.Integer(1), compare=False)

    def jet(self, k: int) -> sp.Symbol:
        return jet(self.dependent, k)

    @property
    def top(self) -> sp.Symbol:
        return self.jet(self.order)

    @property
    def variables(self) -> list[str]:
        """Independent variable followed by jets of order 0..order-1."""
        return [self.independent] + [jet_name(self.dependent, k) for k in range(self.order)]

    def text(self) -> str:
        return f"{jet_name(self.dependent, self.order)} = {to_text(self.rhs)}"

    def __str__(self) -> str:
        return self.text()


@dataclass(frozen=True)
class DependencyProfile:
    order: int
    uses_independent: bool
    uses_dependent: bool

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "uses_independent": self.uses_independent,
            "uses_dependent": self.uses_dependent,
        }


def parse_ode(text: str, dependent: str = "y", independent: str = "x") -> Equation:
    lhs, rhs = parse_equation(text, dependent, independent)
    return Equation(lhs, rhs, dependent, independent)


def highest_order(e: sp.Expr, dependent: str) -> int | None:
    orders = [k for k in (jet_order(n, dependent) for n in names(e)) if k]
    return max(orders) if orders else None


def solve_for_top(p: sp.Expr, dependent: str, independent: str, min_order: int = 2) -> NormalizedOde:
    """Solve ``p = 0`` for its highest derivative, which must enter linearly."""
    n = highest_order(p, dependent)
    if n is None:
        raise NormalizeError("no derivative of the dependent variable present")
    if n < min_order:
        raise NormalizeError(f"order {n} is outside the supported range 2..4")
    top = jet_name(dependent, n)
    c = canonicalize(diff(p, top))
    if canonicalize(diff(c, top)) != 0:
        raise NormalizeError(f"equation is nonlinear in the highest derivative {top}")
    rest = p - c * jet(dependent, n)
    f = canonicalize(-rest / c)
    if top in names(f):
        raise NormalizeError(f"could not isolate {top}")
    return NormalizedOde(independent, dependent, n, f, c)


def normalize_leading(eq: Equation) -> NormalizedOde:
    return solve_for_top(eq.zero_form, eq.dependent, eq.independent)


def load_ode(text: str, dependent: str = "y", independent: str = "x") -> NormalizedOde:
    return normalize_leading(parse_ode(text, dependent, independent))


def dependency_scan(ode: NormalizedOde) -> DependencyProfile:
    present = names(canonicalize(ode.rhs))
    return DependencyProfile(
        order=ode.order,
        uses_independent=ode.independent in present,
        uses_dependent=ode.dependent in present,
    )
