"""Expression kernel: differentiation, substitution, canonical forms and zero testing.

Expressions are plain sympy trees restricted to rationals, named variables,
``+ - * /``, integer powers and the functions exp, ln, sin, cos and sqrt.
Jet variables are ordinary symbols whose names carry primes (``y'``, ``u''``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import sympy as sp
from sympy.printing.str import StrPrinter

Expr = sp.Expr

UNDEFINED = sp.nan

POLE_THRESHOLD = 1e-12
DEFAULT_SAMPLES = 16
DEFAULT_TOL = 1e-8
MAX_RETRIES = 20

_FUNCTIONS = (sp.exp, sp.log, sp.sin, sp.cos)


class EvaluationError(ArithmeticError):
    """Numeric evaluation hit a pole, a domain violation or an unbound variable."""

    def __init__(self, message: str, subexpr: Expr | None = None):
        super().__init__(message)
        self.subexpr = subexpr


class CyclicBindingError(ValueError):
    pass


@lru_cache(maxsize=None)
def var(name: str) -> sp.Symbol:
    return sp.Symbol(name)


def jet_name(dependent: str, order: int) -> str:
    return dependent + "'" * order


def jet(dependent: str, order: int) -> sp.Symbol:
    return var(jet_name(dependent, order))


def jet_order(name: str, dependent: str) -> int | None:
    """Order of ``name`` as a jet variable of ``dependent``, or None."""
    m = re.fullmatch(re.escape(dependent) + r"('*)", name)
    return len(m.group(1)) if m else None


def names(e: Expr) -> set[str]:
    return {s.name for s in e.free_symbols}


def is_undefined(e: Expr) -> bool:
    return bool(e.has(sp.nan, sp.zoo, sp.oo, -sp.oo))


# -- calculus ---------------------------------------------------------------

def diff(e: Expr, v: str) -> Expr:
    return sp.diff(e, var(v))


def total_diff(e: Expr, dependent: str, independent: str, max_order: int) -> Expr:
    """Total derivative d/d(independent) with jets of ``dependent`` promoted one order."""
    present = {jet_order(n, dependent) for n in names(e)} - {None}
    if present and max(present) >= max_order:
        raise ValueError(
            f"expression mentions {jet_name(dependent, max(present))}; "
            f"total derivative would leave the jet space of order {max_order}"
        )
    out = sp.diff(e, var(independent))
    for k in sorted(present):
        out += sp.diff(e, jet(dependent, k)) * jet(dependent, k + 1)
    return out


def substitute(e: Expr, bindings: Mapping[str | sp.Symbol, Expr]) -> Expr:
    """Simultaneous substitution; identity bindings are ignored."""
    table = {}
    for k, v in bindings.items():
        key = var(k) if isinstance(k, str) else k
        value = sp.sympify(v)
        if value != key:
            table[key] = value
    bound = set(table)
    for key, value in table.items():
        clash = value.free_symbols & bound
        if clash:
            raise CyclicBindingError(
                f"binding for {key} mentions bound variable(s) {sorted(s.name for s in clash)}"
            )
    return e.xreplace(table)


# -- canonical form -----------------------------------------------------------

def _canon_inner(e: Expr) -> Expr:
    if e.is_Atom:
        return e
    if isinstance(e, _FUNCTIONS):
        return e.func(canonicalize(e.args[0]))
    if e.is_Pow and not e.exp.is_Integer:
        return sp.Pow(canonicalize(e.base), e.exp)
    return e.func(*[_canon_inner(a) for a in e.args])


# cancel can pull a shared transcendental generator out of a sum only on the
# second pass, so iterate to a fixpoint
_CANON_PASSES = 6


def canonicalize(e: Expr) -> Expr:
    """Quotient of expanded polynomials without common factors.

    Function applications and radicals are treated as extra generators after
    their own arguments have been canonicalized.  A zero denominator yields
    ``UNDEFINED``.
    """
    e = sp.sympify(e)
    if is_undefined(e):
        return UNDEFINED
    out = e
    for _ in range(_CANON_PASSES):
        prev, out = out, sp.cancel(sp.together(_canon_inner(out)))
        if is_undefined(out):
            return UNDEFINED
        if out == prev:
            break
    return out


def numer_denom(e: Expr) -> tuple[Expr, Expr]:
    n, d = sp.fraction(canonicalize(e))
    return sp.expand(n), sp.expand(d)


def denominators(e: Expr) -> list[Expr]:
    """Bases raised to negative powers anywhere in ``e`` (structural, not canonical)."""
    found = []
    for node in sp.preorder_traversal(e):
        if node.is_Pow and node.exp.is_negative and node.base not in found:
            found.append(node.base)
    return found


# -- printing -----------------------------------------------------------------

class _GrammarPrinter(StrPrinter):
    """Prints in the ODE text grammar: ``^`` for powers, ``ln`` for logs."""

    def _print_Pow(self, expr, rational=False):
        e = expr.exp
        if e.is_Rational and not e.is_Integer and e.q & (e.q - 1) == 0:
            # dyadic exponents become nested square roots
            text = self._print(expr.base)
            for _ in range(e.q.bit_length() - 1):
                text = f"sqrt({text})"
            if abs(e.p) != 1:
                text = f"{text}^{abs(e.p)}"
            return text if e.p > 0 else f"1/{text}"
        text = super()._print_Pow(expr, rational)
        return text.replace("**", "^")

    def _print_log(self, expr):
        return f"ln({self._print(expr.args[0])})"

    def _print_Exp1(self, expr):
        return "exp(1)"

    def _print_Rational(self, expr):
        return f"{expr.p}/{expr.q}"

    def _print_Mul(self, expr):
        return super()._print_Mul(expr).replace("**", "^")


_printer = _GrammarPrinter({"order": "grlex"})


def to_text(e: Expr) -> str:
    return _printer.doprint(e)


# -- numerics -------------------------------------------------------------------

def _ev(e: Expr, env: Mapping[str, float]) -> float:
    if e.is_Symbol:
        try:
            return float(env[e.name])
        except KeyError:
            raise EvaluationError(f"unbound variable {e.name}", e) from None
    if e.is_Number or e.is_NumberSymbol:
        if is_undefined(e):
            raise EvaluationError("undefined value", e)
        return float(e)
    if e.is_Add:
        return math.fsum(_ev(a, env) for a in e.args)
    if e.is_Mul:
        out = 1.0
        for a in e.args:
            out *= _ev(a, env)
        return out
    if e.is_Pow:
        b = _ev(e.base, env)
        x = e.exp
        if x.is_Integer:
            n = int(x)
            if n < 0 and abs(b) < POLE_THRESHOLD:
                raise EvaluationError("division by (near) zero", e.base)
            try:
                return b**n
            except OverflowError:
                raise EvaluationError("overflow", e) from None
        if x.is_Rational:
            if b < 0:
                raise EvaluationError("fractional power of a negative value", e)
            if x.is_negative and abs(b) < POLE_THRESHOLD:
                raise EvaluationError("division by (near) zero", e.base)
            return b ** float(x)
        if b <= 0:
            raise EvaluationError("non-integer power of a non-positive value", e)
        return b ** _ev(x, env)
    if isinstance(e, sp.exp):
        try:
            return math.exp(_ev(e.args[0], env))
        except OverflowError:
            raise EvaluationError("overflow in exp", e) from None
    if isinstance(e, sp.log):
        a = _ev(e.args[0], env)
        if a <= 0:
            raise EvaluationError("ln of a non-positive value", e)
        return math.log(a)
    if isinstance(e, sp.sin):
        return math.sin(_ev(e.args[0], env))
    if isinstance(e, sp.cos):
        return math.cos(_ev(e.args[0], env))
    raise EvaluationError(f"unsupported node {type(e).__name__}", e)


def eval_at(e: Expr, point: Mapping[str, float]) -> float:
    """Evaluate in IEEE doubles; poles (|base| < 1e-12) and domain errors raise."""
    value = _ev(sp.sympify(e), point)
    if not math.isfinite(value):
        raise EvaluationError("non-finite result", e)
    return value


def compile_expr(e: Expr, args: Sequence[str]) -> Callable[..., float]:
    """Fast float callable over ``args`` (positional).  No pole guard."""
    return sp.lambdify([var(a) for a in args], e, modules="math", dummify=True)


# -- zero testing -----------------------------------------------------------------

class Verdict(str, Enum):
    PROVEN_ZERO = "proven-zero"
    PROBABLY_ZERO = "probably-zero"
    NONZERO = "nonzero"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class ZeroVerdict:
    kind: Verdict
    samples: int = 0
    max_abs: float = 0.0
    witness: dict[str, float] | None = None
    value: float | None = None

    @property
    def is_zero(self) -> bool:
        return self.kind in (Verdict.PROVEN_ZERO, Verdict.PROBABLY_ZERO)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.kind is Verdict.PROBABLY_ZERO:
            out.update(samples=self.samples, max_abs=self.max_abs)
        if self.kind is Verdict.NONZERO:
            out.update(witness=self.witness, value=self.value)
        return out


def sample_point(rng: np.random.Generator, variables: Iterable[str]) -> dict[str, float]:
    """Components uniform on [-3, -0.5] U [0.5, 3]."""
    point = {}
    for name in sorted(variables):
        mag = rng.uniform(0.5, 3.0)
        point[name] = float(mag if rng.random() < 0.5 else -mag)
    return point


def residual_measure(numer: Expr, point: Mapping[str, float]) -> tuple[float, float]:
    """Numerator value at ``point`` and the sum of its terms' magnitudes."""
    terms = numer.args if numer.is_Add else (numer,)
    vals = [_ev(t, point) for t in terms]
    return math.fsum(vals), math.fsum(abs(v) for v in vals)


def is_zero(
    e: Expr,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> ZeroVerdict:
    """Two-tier zero test: exact canonical form, then seeded random sampling.

    A sample passes when the canonical numerator is within ``tol`` of zero
    relative to the magnitude of its own terms (floored at 1).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    c = canonicalize(e)
    if c == 0:
        return ZeroVerdict(Verdict.PROVEN_ZERO)
    if is_undefined(c):
        return ZeroVerdict(Verdict.INDETERMINATE)
    numer, denom = sp.fraction(c)
    numer = sp.expand(numer)
    rng = np.random.default_rng(seed)
    variables = names(c)
    max_abs = 0.0
    for _ in range(samples):
        for _attempt in range(MAX_RETRIES + 1):
            point = sample_point(rng, variables)
            try:
                d = eval_at(denom, point)
                if abs(d) < POLE_THRESHOLD:
                    continue
                n, scale = residual_measure(numer, point)
            except EvaluationError:
                continue
            if not (math.isfinite(n) and math.isfinite(scale)):
                continue
            break
        else:
            return ZeroVerdict(Verdict.INDETERMINATE, samples=samples)
        value = n / d
        if abs(n) > tol * max(1.0, scale):
            return ZeroVerdict(Verdict.NONZERO, witness=point, value=value)
        max_abs = max(max_abs, abs(value))
    return ZeroVerdict(Verdict.PROBABLY_ZERO, samples=samples, max_abs=max_abs)

