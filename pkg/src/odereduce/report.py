"""Pipelines behind the command line: classify, reduce, check, verify, example.

Every pipeline returns a :class:`Report` whose ``to_dict`` has a fixed field
order; apart from ``generated_at`` the JSON is a pure function of the input
text and the seed.
"""

from __future__ import annotations

import dataclasses
import datetime as _dt
import math
from dataclasses import dataclass, field

import sympy as sp

from . import __version__
from .catalog import EXAMPLES, TRESSE_SIGNS, Discrepancy, Example, lookup
from .constraints import ConstraintReport, evaluate_constraints
from .forms import FORMS, CoeffSet, NoMatch, match_form
from .grammar import ParseError, parse_equation
from .kernel import canonicalize, is_zero, to_text
from .ode import DependencyProfile, NormalizedOde, NormalizeError, dependency_scan, load_ode
from .reduction import (
    IdentificationOutcome,
    ReductionError,
    ReductionTrace,
    identify_coeffs,
    plan,
    reduce,
)
from .verify import (
    IntegrationError,
    ResidualStats,
    integrate,
    reduction_residual,
    solution_residual,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

# form -> (reduction method, form the reduced equation is matched against)
SEMANTIC_ROUTES = {
    "thm1-fourth-x": ("missing-x", "im-type1-3"),
    "thm3-fourth-xy": ("missing-xy", "lie-cubic-2"),
}

# reduction method -> forms whose verdict certifies that route
METHOD_FORMS = {
    "swap": ("swap-remark",),
    "missing-xy": ("thm3-fourth-xy",),
    "missing-x": ("thm1-fourth-x", "thm2-fourth-x"),
    "missing-y": ("type1-fourth-y",),
}


class InputError(Exception):
    def __init__(self, kind: str, message: str, offset: int | None = None):
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.offset = offset

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "offset": self.offset}


def load_input(text: str, dependent: str = "y", independent: str = "x") -> NormalizedOde:
    try:
        return load_ode(text.strip(), dependent, independent)
    except ParseError as exc:
        raise InputError("parse", exc.message, exc.offset) from None
    except NormalizeError as exc:
        raise InputError("normalize", str(exc)) from None


# -- building blocks ---------------------------------------------------------------

@dataclass
class SemanticCheck:
    method: str
    reduced: NormalizedOde | None
    target_form: str
    match: CoeffSet | NoMatch | None
    constraints: ConstraintReport | None
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.constraints is not None and self.constraints.passed

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "reduced": None if self.reduced is None else self.reduced.text(),
            "target_form": self.target_form,
            "match": None if self.match is None else self.match.to_dict(),
            "constraints": None if self.constraints is None else self.constraints.to_dict(),
            "verdict": "pass" if self.passed else "fail",
            "error": self.error,
        }


@dataclass
class FormOutcome:
    form_id: str
    match: CoeffSet | NoMatch
    constraints: ConstraintReport | None = None
    semantic: SemanticCheck | None = None
    identification: IdentificationOutcome | None = None

    @property
    def matched(self) -> bool:
        return isinstance(self.match, CoeffSet)

    @property
    def printed_passed(self) -> bool:
        return self.constraints is not None and self.constraints.passed

    @property
    def passed(self) -> bool:
        if not self.matched:
            return False
        if self.semantic is not None:
            return self.semantic.passed
        return self.printed_passed

    @property
    def printed_formula_disagrees(self) -> bool:
        if not self.matched:
            return False
        if self.semantic is not None and self.constraints is not None and self.constraints.supported:
            if self.semantic.passed != self.printed_passed:
                return True
        return self.identification is not None and bool(self.identification.disagreeing)

    def to_dict(self) -> dict:
        return {
            "form": self.form_id,
            "variant": FORMS[self.form_id].variant,
            "matched": self.matched,
            "match": self.match.to_dict(),
            "printed_constraints": None if self.constraints is None else self.constraints.to_dict(),
            "semantic": None if self.semantic is None else self.semantic.to_dict(),
            "identification": None if self.identification is None else self.identification.to_dict(),
            "verdict": "pass" if self.passed else ("fail" if self.matched else "no-match"),
            "printed_formula_disagrees": self.printed_formula_disagrees,
        }


def _semantic(ode: NormalizedOde, form_id: str, samples: int, tol: float, seed: int) -> SemanticCheck:
    method, target = SEMANTIC_ROUTES[form_id]
    try:
        trace = reduce(ode, method)
    except (ReductionError, NormalizeError) as exc:
        return SemanticCheck(method, None, target, None, None, error=str(exc))
    m = match_form(trace.reduced, target, samples, tol, seed)
    cons = evaluate_constraints(m, samples, tol, seed) if isinstance(m, CoeffSet) else None
    return SemanticCheck(method, trace.reduced, target, m, cons)


def evaluate_form(
    ode: NormalizedOde, form_id: str, samples: int = 16, tol: float = 1e-8, seed: int = 0
) -> FormOutcome:
    """Match one form, then run its printed conditions and any semantic cross-check."""
    m = match_form(ode, form_id, samples, tol, seed)
    out = FormOutcome(form_id, m)
    if not isinstance(m, CoeffSet):
        return out
    out.constraints = evaluate_constraints(m, samples, tol, seed)
    if form_id in SEMANTIC_ROUTES:
        out.semantic = _semantic(ode, form_id, samples, tol, seed)
    if m.variant in ("FourthXTypeI", "FourthXTypeII"):
        try:
            out.identification = identify_coeffs(m, samples, tol, seed)
        except (ReductionError, NormalizeError):
            out.identification = None
    return out


def candidate_forms(ode: NormalizedOde) -> list[str]:
    return [f for f, spec in FORMS.items() if spec.order == ode.order]


def _discrepancies(ode: NormalizedOde, outcomes: list[FormOutcome]) -> list[Discrepancy]:
    found: list[Discrepancy] = []
    ex = lookup(ode)
    if ex is not None:
        found.extend(ex.discrepancies)
    for o in outcomes:
        if not o.matched:
            continue
        tresse_used = (o.constraints is not None and o.constraints.system == "tresse") or (
            o.semantic is not None and o.semantic.constraints is not None
            and o.semantic.constraints.system == "tresse"
        )
        if tresse_used:
            found.append(TRESSE_SIGNS)
        if o.semantic is not None and o.constraints is not None and o.constraints.supported \
                and o.semantic.passed != o.printed_passed:
            found.append(Discrepancy(
                f"{o.form_id}-printed-vs-semantic",
                f"printed conditions {'pass' if o.printed_passed else 'fail'} but the reduced equation "
                f"{'passes' if o.semantic.passed else 'fails'} its own conditions; the semantic verdict is used",
            ))
        if o.identification is not None and o.identification.disagreeing:
            found.append(Discrepancy(
                f"{o.form_id}-identification",
                "identification map disagrees with direct substitution on "
                + ", ".join(o.identification.disagreeing),
            ))
    seen, unique = set(), []
    for d in found:
        if d.flag not in seen:
            seen.add(d.flag)
            unique.append(d)
    return unique


def equation_text(ode: NormalizedOde) -> str:
    """``top + ... = 0`` with the top derivative first, terms expanded."""
    rest = sp.expand(-ode.rhs)
    body = to_text(rest)
    top = to_text(ode.top)
    if rest == 0:
        return f"{top} = 0"
    if body.startswith("-"):
        return f"{top} - {body[1:]} = 0"
    return f"{top} + {body} = 0"


# -- report --------------------------------------------------------------------------

@dataclass
class Report:
    command: str
    seed: int
    input: dict
    profile: DependencyProfile | None = None
    forms: list[FormOutcome] = field(default_factory=list)
    plan: list[str] = field(default_factory=list)
    reductions: list[ReductionTrace] = field(default_factory=list)
    verification: dict | None = None
    comparisons: dict | None = None
    discrepancies: list[Discrepancy] = field(default_factory=list)
    status: str = "fail"
    exit_code: int = EXIT_FAIL
    messages: list[str] = field(default_factory=list)
    generated_at: str = field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    )

    def to_dict(self) -> dict:
        return {
            "tool": "odereduce",
            "version": __version__,
            "command": self.command,
            "seed": self.seed,
            "generated_at": self.generated_at,
            "input": self.input,
            "profile": None if self.profile is None else self.profile.to_dict(),
            "forms": [o.to_dict() for o in self.forms],
            "plan": list(self.plan),
            "reductions": [t.to_dict() | {"equation": equation_text(t.reduced)} for t in self.reductions],
            "verification": self.verification,
            "comparisons": self.comparisons,
            "discrepancies": [d.to_dict() for d in self.discrepancies],
            "messages": list(self.messages),
            "status": self.status,
            "exit_code": self.exit_code,
        }


def _echo(text: str, dependent: str, independent: str, ode: NormalizedOde | None = None) -> dict:
    out = {"text": text.strip(), "dependent": dependent, "independent": independent}
    out["normalized"] = None if ode is None else ode.text()
    ex = None if ode is None else lookup(ode)
    out["builtin_example"] = None if ex is None else ex.number
    return out


def _finish(report: Report, ok: bool) -> Report:
    report.status = "pass" if ok else "fail"
    report.exit_code = EXIT_OK if ok else EXIT_FAIL
    return report


def diagnostic(command: str, err: InputError) -> dict:
    """Structured error payload for malformed input; no partial report is produced."""
    return {"tool": "odereduce", "command": command, "status": "input-error", "exit_code": EXIT_INPUT,
            "error": err.to_dict()}


# -- pipelines -----------------------------------------------------------------------

def classify(
    text: str, seed: int = 0, samples: int = 16, zero_tol: float = 1e-8,
    dependent: str = "y", independent: str = "x",
) -> Report:
    ode = load_input(text, dependent, independent)
    report = Report("classify", seed, _echo(text, dependent, independent, ode), dependency_scan(ode))
    report.forms = [evaluate_form(ode, f, samples, zero_tol, seed) for f in candidate_forms(ode)]
    report.plan = plan(ode)
    report.discrepancies = _discrepancies(ode, report.forms)
    if report.plan:
        report.messages.append("reductions offered: " + ", ".join(report.plan))
    return _finish(report, any(o.passed for o in report.forms))


def choose_method(ode: NormalizedOde, outcomes: list[FormOutcome]) -> str | None:
    """First planned method whose certifying form passes, else the first planned one."""
    methods = plan(ode)
    passed = {o.form_id for o in outcomes if o.passed}
    for m in methods:
        if any(f in passed for f in METHOD_FORMS[m]):
            return m
    return methods[0] if methods else None


def reduce_report(
    text: str, method: str = "auto", seed: int = 0, samples: int = 16, zero_tol: float = 1e-8,
    dependent: str = "y", independent: str = "x",
) -> Report:
    report = classify(text, seed, samples, zero_tol, dependent, independent)
    report.command = "reduce"
    ode = load_input(text, dependent, independent)
    if method == "auto":
        method = choose_method(ode, report.forms)
        if method is None:
            report.messages.append("no reduction method applies")
            return _finish(report, False)
    try:
        trace = reduce(ode, method)
    except (ReductionError, NormalizeError) as exc:
        report.messages.append(f"{method}: {exc}")
        return _finish(report, False)
    report.reductions = [trace]
    return _finish(report, True)


def check_report(
    text: str, form_id: str, seed: int = 0, samples: int = 16, zero_tol: float = 1e-8,
    dependent: str = "y", independent: str = "x",
) -> Report:
    ode = load_input(text, dependent, independent)
    if form_id not in FORMS:
        raise InputError("form", f"unknown form id {form_id!r}; known: {', '.join(FORMS)}")
    report = Report("check", seed, _echo(text, dependent, independent, ode), dependency_scan(ode))
    outcome = evaluate_form(ode, form_id, samples, zero_tol, seed)
    report.forms = [outcome]
    report.discrepancies = _discrepancies(ode, report.forms)
    return _finish(report, outcome.passed)


def _stats(s: ResidualStats, tol: float) -> dict:
    return s.to_dict() | {"tol": tol, "pass": s.passes(tol)}


def _family_check(ex: Example, trace: ReductionTrace, seed: int, tol: float, samples: int = 16) -> dict:
    sol = ex.solution
    if sol.target == "source":
        ode = trace.source
    elif sol.target == "reduced":
        ode = trace.reduced
    else:
        ode = ex.published_reduced_ode()
    stats = solution_residual(ode, ex.solution_expr(), sol.constants, samples, seed, sol.implicit)
    out = {
        "target": sol.target,
        "equation": ode.text(),
        "family": sol.expression,
        "implicit": sol.implicit,
        "stats": _stats(stats, tol),
    }
    if sol.published:
        printed = solution_residual(ode, ex.solution_expr(published=True), sol.constants, samples, seed, sol.implicit)
        out["published_family"] = sol.published
        out["published_stats"] = _stats(printed, tol)
    return out


def _numeric(trace: ReductionTrace, initial, h: float, steps: int, tol: float) -> dict:
    try:
        traj = integrate(trace.source, initial, h, steps)
        half = integrate(trace.source, initial, h / 2, 2 * steps)
    except (IntegrationError, ValueError) as exc:
        return {"error": str(exc), "pass": False}
    s1, s2 = reduction_residual(trace, traj), reduction_residual(trace, half)
    ratio = s1.max_abs / s2.max_abs if s2.max_abs > 0 else None
    if ratio is not None and not math.isfinite(ratio):
        ratio = None
    return {
        "initial": [float(v) for v in initial],
        "trajectory": traj.to_dict(),
        "reduction_residual": _stats(s1, tol),
        "half_step_residual": s2.to_dict(),
        "halving_ratio": ratio,
        "pass": s1.passes(tol),
    }


def default_initial(order: int) -> list[float]:
    return [0.0] + [1.0] * (order - 1)


def verify_report(
    text: str, method: str = "auto", numeric: bool = True, h: float | None = None, steps: int | None = None,
    tol: float = 1e-6, seed: int = 0, initial: list[float] | None = None, samples: int = 16,
    dependent: str = "y", independent: str = "x",
) -> Report:
    """Classification, reduction and numerical residual checks in one report.

    Passes when some linearizable-or-reducible verdict holds and every
    computed residual is within ``tol``.
    """
    report = reduce_report(text, method, seed, samples, 1e-8, dependent, independent)
    report.command = "verify"
    classified = any(o.passed for o in report.forms)
    if not report.reductions:
        return _finish(report, False)
    trace = report.reductions[0]
    ex = lookup(trace.source)
    checks: dict = {"classified": classified}
    ok = classified
    if numeric:
        init = initial or (list(ex.initial) if ex else default_initial(trace.source.order))
        hh = h or (ex.h if ex else 1e-3)
        n = steps or (ex.steps if ex else 500)
        checks["numeric"] = _numeric(trace, init, hh, n, tol)
        ok = ok and checks["numeric"]["pass"]
    if ex is not None and ex.method == trace.method:
        checks["solution"] = _family_check(ex, trace, seed, tol, samples)
        ok = ok and checks["solution"]["stats"]["pass"]
    if not classified:
        report.messages.append("no linearizable-or-reducible verdict passed")
    report.verification = checks
    return _finish(report, ok)


def example_report(n: int, seed: int = 0, tol: float = 1e-6, samples: int = 16) -> Report:
    """Full pipeline on a built-in example, with published-versus-computed comparisons."""
    if n not in EXAMPLES:
        raise InputError("example", f"no built-in example {n}; choose from {sorted(EXAMPLES)}")
    ex = EXAMPLES[n]
    report = verify_report(ex.text, ex.method, tol=tol, seed=seed, samples=samples)
    report.command = "example"
    trace = report.reductions[0]

    outcome = next(o for o in report.forms if o.form_id == ex.form_id)
    coeffs: dict = {}
    if outcome.matched:
        for k, text in ex.published_coeffs.items():
            value = parse_equation(text)[0]
            got = outcome.match[k]
            coeffs[k] = {
                "published": to_text(value),
                "computed": to_text(got),
                "agrees": is_zero(got - value, seed=seed).is_zero,
            }

    printed_reduced = ex.published_reduced_ode()
    same_vars = (printed_reduced.dependent, printed_reduced.independent) == (
        trace.reduced.dependent, trace.reduced.independent,
    )
    agrees = same_vars and printed_reduced.order == trace.reduced.order and is_zero(
        canonicalize(printed_reduced.rhs - trace.reduced.rhs), seed=seed
    ).is_zero
    report.comparisons = {
        "example": n,
        "published_ode": ex.published_text,
        "corrected_ode": ex.corrected_text,
        "form": ex.form_id,
        "coefficients": coeffs,
        "reduced_equation": {
            "published": ex.published_reduced,
            "computed": equation_text(trace.reduced),
            "agrees": agrees,
        },
        "recipe": trace.recipe,
    }
    ok = report.status == "pass" and outcome.passed
    report.messages.append(f"example {n}: pipeline {'pass' if ok else 'fail'}")
    return _finish(report, ok)


def text_summary(report: Report) -> str:
    """Human-readable rendering of a report."""
    d = report.to_dict()
    lines = []
    lines.append(f"input: {d['input']['normalized']}")
    if d["profile"]:
        p = d["profile"]
        lines.append(
            f"order {p['order']}; uses {report.input['independent']}: {p['uses_independent']}; "
            f"uses {report.input['dependent']}: {p['uses_dependent']}"
        )
    for o in d["forms"]:
        if not o["matched"]:
            lines.append(f"  {o['form']}: no match ({o['match']['reason']})")
            continue
        lines.append(f"  {o['form']}: {o['verdict']}")
        lines.append("    coefficients: " + ", ".join(f"{k}={v}" for k, v in o["match"]["coefficients"].items()))
        pc = o["printed_constraints"]
        if pc and pc["conditions"]:
            lines.append(f"    printed conditions: {pc['verdict']}")
            for c in pc["conditions"]:
                lines.append(f"      {c['id']}: {c['verdict']['kind']}  residual {c['residual']}")
        if o["semantic"]:
            s = o["semantic"]
            lines.append(f"    semantic ({s['method']} -> {s['target_form']}): {s['verdict']}")
        if o["identification"] and o["identification"]["disagreeing"]:
            lines.append("    identification disagrees on: " + ", ".join(o["identification"]["disagreeing"]))
        if o["printed_formula_disagrees"]:
            lines.append("    printed_formula_disagrees")
    if d["plan"]:
        lines.append("plan: " + ", ".join(d["plan"]))
    for t in d["reductions"]:
        lines.append(f"reduction ({t['method']}): {t['equation']}")
        lines.append(f"  variables: {t['reduced_dependent']}({t['reduced_independent']})")
        for i, step in enumerate(t["recipe"], 1):
            lines.append(f"  {i}. {step}")
        for w in t["warnings"]:
            lines.append(f"  warning: {w}")
    v = d["verification"]
    if v:
        if "numeric" in v:
            num = v["numeric"]
            if "error" in num:
                lines.append(f"numeric: {num['error']}")
            else:
                rr = num["reduction_residual"]
                ratio = "n/a" if num["halving_ratio"] is None else f"{num['halving_ratio']:.2f}"
                lines.append(
                    f"reduction residual: max {rr['max_abs']:.3e} over {rr['evaluated']} points "
                    f"(skipped {rr['skipped']}), halving ratio {ratio}"
                )
        if "solution" in v:
            s = v["solution"]["stats"]
            lines.append(f"solution residual: max {s['max_abs']:.3e} ({'pass' if s['pass'] else 'fail'})")
    if d["comparisons"]:
        c = d["comparisons"]
        for k, row in c["coefficients"].items():
            mark = "ok" if row["agrees"] else "DIFFERS"
            lines.append(f"  {k}: published {row['published']}, computed {row['computed']} [{mark}]")
        r = c["reduced_equation"]
        lines.append(f"  reduced: published {r['published']}")
        lines.append(f"           computed  {r['computed']} [{'ok' if r['agrees'] else 'DIFFERS'}]")
    for disc in d["discrepancies"]:
        lines.append(f"flag {disc['flag']}: {disc['summary']}")
    for m in d["messages"]:
        lines.append(m)
    lines.append(f"status: {d['status']}")
    return "\n".join(lines)


def strip_timestamp(d: dict) -> dict:
    return {k: v for k, v in d.items() if k != "generated_at"}


def replace_reduced(trace: ReductionTrace, reduced: NormalizedOde) -> ReductionTrace:
    """Copy of ``trace`` with a different reduced equation (negative controls)."""
    return dataclasses.replace(trace, reduced=reduced)
