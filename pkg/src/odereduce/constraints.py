"""Linearizability and reducibility condition systems as symbolic residuals.

Each residual is the left-hand side of a published condition with the
coefficients substituted, canonicalized and zero-tested.  No condition is
rescaled, so residual texts are comparable between runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .forms import CoeffSet
from .kernel import ZeroVerdict, canonicalize, is_zero, to_text, var

R = sp.Rational


@dataclass(frozen=True)
class ConditionResult:
    condition_id: str
    residual: sp.Expr
    verdict: ZeroVerdict

    def to_dict(self) -> dict:
        return {
            "id": self.condition_id,
            "residual": to_text(self.residual),
            "verdict": self.verdict.to_dict(),
        }


@dataclass
class ConstraintReport:
    form_id: str
    system: str
    conditions: list[ConditionResult] = field(default_factory=list)
    provenance: list[str] = field(default_factory=list)
    supported: bool = True
    extra: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.supported and all(c.verdict.is_zero for c in self.conditions)

    def __getitem__(self, condition_id: str) -> ConditionResult:
        for c in self.conditions:
            if c.condition_id == condition_id:
                return c
        raise KeyError(condition_id)

    def to_dict(self) -> dict:
        out = {
            "form": self.form_id,
            "system": self.system,
            "supported": self.supported,
            "verdict": "pass" if self.passed else ("unsupported" if not self.supported else "fail"),
            "conditions": [c.to_dict() for c in self.conditions],
            "provenance": list(self.provenance),
        }
        if self.extra:
            out.update(self.extra)
        return out


def _report(form_id, system, residuals, provenance, samples, tol, seed, extra=None) -> ConstraintReport:
    conds = []
    for cid, expr in residuals:
        res = canonicalize(expr)
        conds.append(ConditionResult(cid, res, is_zero(res, samples, tol, seed)))
    return ConstraintReport(form_id, system, conds, list(provenance), extra=extra or {})


def _d(e: sp.Expr, *wrt: sp.Symbol) -> sp.Expr:
    for s in wrt:
        e = sp.diff(e, s)
    return e


# -- Lie / Tresse ---------------------------------------------------------------

TRESSE_SIGN_NOTE = (
    "tresse: conditions evaluated with the all-plus cubic y''+a1*y'^3+a2*y'^2+a3*y'+a4=0; "
    "stored Cubic2 coefficients (alternating-sign convention) are mapped a2->-a2, a4->-a4 first"
)


def tresse_residuals(a1, a2, a3, a4, X: sp.Symbol, Y: sp.Symbol) -> list[sp.Expr]:
    """The two Tresse conditions for y'' + a1 y'^3 + a2 y'^2 + a3 y' + a4 = 0 in (X, Y)."""
    d = _d
    t1 = (
        3 * d(a1 * a3, X) - 3 * a4 * d(a1, Y) - 6 * a1 * d(a4, Y) - 2 * a2 * d(a2, X)
        + a2 * d(a3, Y) - 3 * d(a1, X, X) + 2 * d(a2, X, Y) - d(a3, Y, Y)
    )
    t2 = (
        3 * d(a4 * a2, Y) - 3 * a1 * d(a4, X) - 6 * a4 * d(a1, X) - 2 * a3 * d(a3, Y)
        + a3 * d(a2, X) + 3 * d(a4, Y, Y) - 2 * d(a3, X, Y) + d(a2, X, X)
    )
    return [t1, t2]


def tresse_conditions(coeffs: CoeffSet, samples: int = 16, tol: float = 1e-8, seed: int = 0) -> ConstraintReport:
    X, Y = (var(n) for n in coeffs.variables)
    k = coeffs.coeffs
    t1, t2 = tresse_residuals(k["a1"], -k["a2"], k["a3"], -k["a4"], X, Y)
    return _report(
        coeffs.form_id, "tresse", [("tresse-1", t1), ("tresse-2", t2)],
        [TRESSE_SIGN_NOTE], samples, tol, seed,
    )


# -- Ibragimov-Meleshko Type I ----------------------------------------------------

def im_type1_residuals(a1, a0, b3, b2, b1, b0, X: sp.Symbol, Y: sp.Symbol) -> list[sp.Expr]:
    d = _d
    return [
        d(a0, Y) - d(a1, X),
        d(3 * b1 - a0**2 - 3 * d(a0, X), Y),
        3 * d(a1, X) + a0 * a1 - 3 * b2,
        3 * d(a1, Y) + a1**2 - 9 * b3,
        (9 * b1 - 6 * d(a0, X) - 2 * a0**2) * d(a1, X)
        + 9 * d(d(b1, X) - a1 * b0, Y) + 3 * d(b1, Y) * a0 - 27 * d(b0, Y, Y),
    ]


def im_type1_conditions(coeffs: CoeffSet, samples: int = 16, tol: float = 1e-8, seed: int = 0) -> ConstraintReport:
    X, Y = (var(n) for n in coeffs.variables)
    k = coeffs.coeffs
    res = im_type1_residuals(*(k[n] for n in ("a1", "a0", "b3", "b2", "b1", "b0")), X, Y)
    return _report(
        coeffs.form_id, "im-type1", [(f"im1-{i + 1}", r) for i, r in enumerate(res)],
        [f"im-type1: five conditions instantiated in ({X}, {Y})"], samples, tol, seed,
    )


# -- Theorem 1 (fourth order, x missing, Type I) -------------------------------------

def theorem1_residuals(A1, A0, B3, B2, B1, B0, y: sp.Symbol, p: sp.Symbol) -> list[sp.Expr]:
    d = _d
    return [
        p**2 * d(A1, y) - p * d(A0, p) + A0,
        p**2 * (-3 * d(A0, y, p)) + p * (3 * d(B1, p) + 3 * d(A0, y) - 2 * A0 * d(A0, p))
        + (-6 * B1 + 2 * A0**2),
        p**2 * (3 * d(A1, y)) + p * (A0 * A1 - 3 * B2) + A0,
        p**2 * (3 * d(A1, p) - 9 * B3 + A1**2) - p * A1 - 5,
        p**4 * (-6 * d(A0, y) * d(A1, y))
        + p**3 * (9 * B1 * d(A1, y) - 2 * A0**2 * d(A1, y) + 9 * d(B1, y, p))
        + p**2 * (
            -18 * d(B1, y) - 9 * A1 * d(B0, p) - 9 * B0 * d(A1, p) + 3 * A0 * d(B1, p)
            - 27 * d(B0, p, p)
        )
        + p * (27 * A1 * B0 - 6 * A0 * B1 + 126 * d(B0, p))
        - 180 * B0,
    ]


def theorem1_conditions(coeffs: CoeffSet, samples: int = 16, tol: float = 1e-8, seed: int = 0) -> ConstraintReport:
    y, p = (var(n) for n in coeffs.variables)
    k = coeffs.coeffs
    res = theorem1_residuals(*(k[n] for n in ("A1", "A0", "B3", "B2", "B1", "B0")), y, p)
    return _report(
        coeffs.form_id, "theorem-1", [(f"thm1-{i + 1}", r) for i, r in enumerate(res)],
        ["theorem-1: five printed conditions in (y, y')"], samples, tol, seed,
    )


# -- Theorem 2 (fourth order, x missing, Type II) ------------------------------------

TOKEN_READINGS = [
    "c3: r_{oyy} read as r0_yy (low confidence)",
    "c3: r_{oy'} read as r0_y' (low confidence)",
    "c4: r_{oyy'} read as r0_yy' (low confidence)",
    "c4: r_{oy'} read as r0_y' and c_2 as C2 (low confidence)",
    "c5: r_{oy} read as r0_y, -9d_2 read as -9*D2 (low confidence)",
    "c7: d_{4y'} read as D4_y', 33C_2^2r_{0y'}) read as 33*C2^2*r0_y' (low confidence)",
    "c8: r_0H_y' read as r0*H_y'",
]


def compute_H(coeffs: CoeffSet) -> sp.Expr:
    """Auxiliary function H(y, y') entering the eighth Type II condition."""
    y, p = (var(n) for n in coeffs.variables)
    k = coeffs.coeffs
    r0, C2, C1 = k["r0"], k["C2"], k["C1"]
    D5, D4 = k["D5"], k["D4"]
    d = _d
    H = (
        d(D4, p) + R(1, 3) * d(C2, p, p) + R(2, 3) * C2 * d(C2, p) + R(2, 3) * C2 * D4
        + R(4, 27) * C2**3
        + (-R(4, 3) * d(C2, p) + R(2, 3) * C2**2 - R(4, 3) * D4 - R(8, 9) * C2**2) / p
        + (-R(5, 9) * C2) / p**2
        + R(40, 27) / p**3
        + (-2 * d(D5, y) - R(2, 3) * C1 * D5) / p**5
        + (-3 * r0 * d(D5, p) - 5 * D5 * d(r0, p) - 2 * r0 * C2 * D5 - R(8, 3) * r0 * D5) / p**6
        + (24 * r0 * D5) / p**7
    )
    return canonicalize(H)


def theorem2_residuals(coeffs: CoeffSet) -> list[sp.Expr]:
    y, p = (var(n) for n in coeffs.variables)
    k = coeffs.coeffs
    r0, C2, C1, C0 = k["r0"], k["C2"], k["C1"], k["C0"]
    D5, D4, D3, D2, D1 = k["D5"], k["D4"], k["D3"], k["D2"], k["D1"]
    d = _d
    r0y, r0p = d(r0, y), d(r0, p)
    r0yy, r0yp, r0pp = d(r0, y, y), d(r0, y, p), d(r0, p, p)
    C1y, C1p, C2y, C2p = d(C1, y), d(C1, p), d(C2, y), d(C2, p)

    c1 = (
        (r0 * C1 - 6 * r0y) * p**2
        + (6 * r0 * r0p + 4 * r0**2 - r0**2 * C2 - C0) * p
        - 4 * r0**2
    )
    c2 = (
        (C2y - C1p) * p**3
        + (r0 * C2p + C2 * r0p - 4 * r0p - 6 * r0pp) * p**2
        + (10 * r0p + 4 * r0 - C2 * r0) * p
        - 8 * r0
    )
    c3 = (
        (-6 * r0**2 * C1y - 54 * r0y**2 + 18 * r0 * r0yy + 18 * r0 * r0y * C1 - 2 * r0**2 * C1**2) * p**8
        + (
            3 * r0**3 * C1p + 48 * r0**2 * r0y - 3 * r0**3 * C2y - 36 * r0**2 * r0yp
            - 6 * r0**2 * r0y * C2 - 18 * r0**2 * r0p * C1 + 2 * r0**3 * C1 * C2 - 16 * r0**3 * C1
        ) * p**7
        + (
            -60 * r0**3 * r0p + 9 * r0**4 * C2p - 42 * r0**2 * r0y - 36 * r0**2 * r0p**2
            + 9 * r0**3 * r0p * C2 + 14 * r0**3 * C1 - 32 * r0**4 + 8 * r0**4 * C2
            + 4 * r0**4 * C2**2 + 18 * r0**4 * D4
        ) * p**6
        + (44 * r0**4 + 72 * r0**2 * r0p - 18 * r0**3 * r0p - 7 * r0**4 * C2) * p**5
        + (-20 * r0**4) * p**4
        - 72 * r0**5 * D5
    )
    c4 = (
        (-12 * r0 * C1y + 18 * r0yp + 18 * r0y * C1 - 4 * r0 * C1**2) * p**8
        + (
            9 * r0**2 * C1p - 48 * r0 * r0y - 27 * r0**2 * C2y - 36 * r0 * r0yp - 18 * r0y
            + 72 * r0 * r0y + 24 * r0 * r0y * C2 - 18 * r0 * r0p * C1 - 18 * r0 * r0p
            - 32 * r0**2 * C1 - 2 * r0**2 * C1 * C2
        ) * p**7
        + (
            -18 * D1 - 36 * r0**2 * r0p + 33 * r0**3 * C2p + 6 * r0 * r0y + 18 * r0**2 * C1
            - 21 * r0**2 * r0p * C2 + 18 * r0 * r0p**2 - 64 * r0**3 + 4 * r0**2 * C1
            - 8 * r0**3 * C2 + 20 * r0**3 * C2**2 + 72 * r0**3 * D4
        ) * p**6
        + (52 * r0**3 + 6 * r0**2 * r0p + 13 * r0**3 * C2) * p**5
        + (-22 * r0**3) * p**4
        - 270 * r0**4 * D5
    )
    c5 = (
        (-3 * C1y - C1**2) * p**8
        + (3 * r0 * C1p - 12 * r0y - 21 * r0 * C2y - 8 * r0 * C1 + 15 * r0y * C2 - 5 * r0 * C1 * C2) * p**7
        + (
            -9 * D2 + 12 * r0 * r0p + 21 * r0**2 * C2p - 30 * r0y - 15 * r0 * r0p * C2
            + 10 * r0 * C1 - 20 * r0**2 * C2 + 14 * r0**2 * C2**2 + 54 * r0**2 * D4 - 16 * r0**2
        ) * p**6
        + (-9 * C0 + 28 * r0**2 + 30 * r0 * r0p + 13 * r0**2 * C2) * p**5
        + (-40 * r0**2) * p**4
        - 180 * r0**3 * D5
    )
    c6 = (
        (-3 * C2y - C1 * C2) * p**7
        + (-3 * D3 + 4 * C1 + 3 * r0 * C2p - 4 * r0 * C2 + 2 * r0 * C2**2 + 12 * r0 * D4) * p**6
        + (-4 * r0 + 4 * r0 * C2) * p**5
        + (-r0) * p**4
        - 30 * r0**2 * D5
    )
    c7 = (
        (-54 * d(D4, y) + 18 * d(C1, p, p) + 3 * C2 * C1p - 72 * d(C2, y, p) - 39 * C2 * C2y) * p**8
        + (
            24 * C2y + 72 * r0pp + 12 * C2 * r0p - 6 * C1p + 36 * r0 * d(C2, p, p)
            - 3 * r0 * C2 * C2p + 72 * r0p * C2p + 33 * C2**2 * r0p + 108 * D4 * r0p
            + 54 * r0 * d(D4, p) + 36 * r0 * C2**2 + 18 * r0 * d(C2, p, p)
        ) * p**7
        + (-168 * r0p - 12 * r0 * C2 - 138 * r0 * C2p - 24 * C2 * r0p - 33 * r0 * C2**2 - 36 * r0 * D4) * p**6
        + (168 * r0 - 228 * r0 * C2 + 60 * r0p) * p**5
        + (-120 * r0) * p**4
        + (270 * D5 * r0y + 270 * r0 * d(D5, y)) * p**2
        + (54 * r0**2 * d(D5, p) - 810 * r0 * r0p * D5) * p
        + 2160 * r0**2 * D5
    )
    H = compute_H(coeffs)
    c8 = -d(H, y) * p**2 + (3 * H * r0p + r0 * d(H, p)) * p - 3 * H * r0
    return [c1, c2, c3, c4, c5, c6, c7, c8]


def theorem2_conditions(coeffs: CoeffSet, samples: int = 16, tol: float = 1e-8, seed: int = 0) -> ConstraintReport:
    res = theorem2_residuals(coeffs)
    return _report(
        coeffs.form_id, "theorem-2", [(f"c{i + 1}", r) for i, r in enumerate(res)],
        ["theorem-2: conditions c1-c8 with the auxiliary function H"] + TOKEN_READINGS,
        samples, tol, seed, extra={"H": to_text(compute_H(coeffs))},
    )


# -- Theorem 3 (fourth order, x and y missing) --------------------------------------

def theorem3_residuals(a, b, c, dd, p: sp.Symbol, q: sp.Symbol) -> list[sp.Expr]:
    d = _d
    t1 = (
        3 * d(a, p, p) * q**4
        + (2 * b * d(b, p) - 3 * c * d(a, p) - 3 * a * d(c, p) - 2 * d(b, p, q)) * q**3
        + (2 * d(b, p) - b * d(c, q) + 3 * d(a, q) * dd + 6 * a * d(dd, q) - d(c, q, q)) * q**2
        + (b * c - 9 * a * dd - 3 * d(c, q)) * q
        - c
    )
    t2 = (
        d(b, p, p) * q**4
        + (d(b, p) * c + 3 * d(dd, q) * b - 3 * d(dd, p) * a - 6 * d(a, p) * dd - 2 * d(c, p, q)) * q**3
        + (d(c, p) + 3 * d(dd, q) - 6 * b * dd + 3 * d(b, q) * dd - 2 * c * d(c, q) + 3 * d(dd, q, q)) * q**2
        + (2 * c**2 - 6 * dd - 12 * d(dd, q)) * q
        + 15 * dd
    )
    return [t1, t2]


def theorem3_conditions(coeffs: CoeffSet, samples: int = 16, tol: float = 1e-8, seed: int = 0) -> ConstraintReport:
    p, q = (var(n) for n in coeffs.variables)
    k = coeffs.coeffs
    t1, t2 = theorem3_residuals(k["a"], k["b"], k["c"], k["d"], p, q)
    return _report(
        coeffs.form_id, "theorem-3", [("thm3-1", t1), ("thm3-2", t2)],
        ["theorem-3: two printed conditions in (y', y''); cross-checked against the reduced Tresse test"],
        samples, tol, seed,
    )


def evaluate_constraints(coeffs: CoeffSet, samples: int = 16, tol: float = 1e-8, seed: int = 0) -> ConstraintReport:
    variant = coeffs.variant
    if variant == "Cubic2":
        return tresse_conditions(coeffs, samples, tol, seed)
    if variant == "ThirdTypeI":
        return im_type1_conditions(coeffs, samples, tol, seed)
    if variant == "FourthXTypeI":
        return theorem1_conditions(coeffs, samples, tol, seed)
    if variant == "FourthXTypeII":
        return theorem2_conditions(coeffs, samples, tol, seed)
    if variant == "FourthXY":
        return theorem3_conditions(coeffs, samples, tol, seed)
    if variant == "ThirdTypeII":
        return ConstraintReport(
            coeffs.form_id, "im-type2", supported=False,
            provenance=["Type II third-order conditions are not printed; form match only"],
        )
    # SwapForm: the match itself (f linear in x) is the whole criterion
    return ConstraintReport(coeffs.form_id, "swap", provenance=["swap form: linearity in x checked at match time"])
