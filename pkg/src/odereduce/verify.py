"""Numerical validation: RK4 trajectories, reduction residuals, solution residuals.

Fixed-step classical Runge-Kutta keeps runs deterministic, so residual
reports can be compared byte for byte.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .kernel import (
    EvaluationError,
    canonicalize,
    compile_expr,
    denominators,
    jet_name,
    names,
    substitute,
    var,
)
from .ode import NormalizedOde
from .reduction import ReductionTrace

GUARD = 1e-6
STATE_BOUND = 1e8

_FLOAT_ERRORS = (ZeroDivisionError, ValueError, OverflowError, TypeError, EvaluationError)
_STEP_ERRORS = _FLOAT_ERRORS + (ArithmeticError,)


class _Tripped(ArithmeticError):
    """An RK4 stage landed on a guarded point."""


class IntegrationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Trajectory:
    independent: str
    dependent: str
    order: int
    h: float
    grid: np.ndarray  # shape (N,)
    jets: np.ndarray  # shape (N, order + 1); last column is f at the point
    steps_requested: int
    halted: str | None = None

    @property
    def steps_taken(self) -> int:
        return len(self.grid) - 1

    def point(self, i: int) -> dict[str, float]:
        out = {self.independent: float(self.grid[i])}
        for k in range(self.order + 1):
            out[jet_name(self.dependent, k)] = float(self.jets[i, k])
        return out

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "steps_requested": self.steps_requested,
            "steps_taken": self.steps_taken,
            "halted": self.halted,
            "start": self.point(0),
            "end": self.point(len(self.grid) - 1),
        }


@dataclass(frozen=True)
class ResidualStats:
    max_abs: float
    mean_abs: float
    evaluated: int
    skipped: int

    @property
    def indeterminate(self) -> bool:
        return self.evaluated == 0

    def passes(self, tol: float) -> bool:
        return not self.indeterminate and self.max_abs <= tol

    def to_dict(self) -> dict:
        return {
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "verdict": "indeterminate" if self.indeterminate else "evaluated",
        }

    @classmethod
    def from_values(cls, values: Sequence[float | None]) -> ResidualStats:
        good = [abs(v) for v in values if v is not None]
        skipped = len(values) - len(good)
        if not good:
            return cls(math.nan, math.nan, 0, skipped)
        return cls(float(max(good)), float(sum(good) / len(good)), len(good), skipped)


# -- integration -----------------------------------------------------------------

class _Field:
    """Companion first-order system of ``y^(n) = f`` with a denominator guard."""

    def __init__(self, ode: NormalizedOde):
        args = ode.variables
        self.n = ode.order
        self.f = compile_expr(ode.rhs, args)
        self.dens = [compile_expr(d, args) for d in denominators(canonicalize(ode.rhs))]

    def top(self, t: float, state: np.ndarray) -> float:
        return float(self.f(t, *state))

    def trip(self, t: float, state: np.ndarray) -> str | None:
        """Why ``(t, state)`` is unsafe to evaluate, or None."""
        if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > STATE_BOUND:
            return "state bound exceeded"
        try:
            if any(abs(d(t, *state)) < GUARD for d in self.dens):
                return "denominator guard tripped"
        except _FLOAT_ERRORS:
            return "denominator guard tripped"
        return None

    def guarded(self, t: float, state: np.ndarray) -> bool:
        return self.trip(t, state) is not None

    def rhs(self, t: float, state: np.ndarray) -> np.ndarray:
        reason = self.trip(t, state)
        if reason:
            raise _Tripped(f"{reason} inside a step")
        out = np.empty(self.n)
        out[:-1] = state[1:]
        out[-1] = self.top(t, state)
        return out

    def step(self, t: float, state: np.ndarray, h: float) -> np.ndarray:
        k1 = self.rhs(t, state)
        k2 = self.rhs(t + h / 2, state + h / 2 * k1)
        k3 = self.rhs(t + h / 2, state + h / 2 * k2)
        k4 = self.rhs(t + h, state + h * k3)
        return state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(
    ode: NormalizedOde, initial: Sequence[float], h: float, steps: int, x0: float = 0.0
) -> Trajectory:
    """Integrate from ``x0`` with jets ``initial = (y, y', ..., y^(n-1))``.

    Halts early, recording why, when a denominator of f drops below the guard
    or the state leaves the bound.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    if len(initial) != ode.order:
        raise ValueError(f"need {ode.order} initial values, got {len(initial)}")
    field = _Field(ode)
    state = np.array(initial, dtype=float)
    if field.guarded(x0, state):
        raise IntegrationError(f"initial point {list(initial)} is singular for f")

    grid = [x0]
    rows = [np.append(state, field.top(x0, state))]
    halted = None
    t = x0
    for i in range(1, steps + 1):
        try:
            nxt = field.step(t, state, h)
        except _Tripped as exc:
            halted = f"{exc} at step {i}"
            break
        except _FLOAT_ERRORS as exc:
            halted = f"evaluation failed at step {i}: {exc}"
            break
        t_next = x0 + i * h
        reason = field.trip(t_next, nxt)
        if reason:
            halted = f"{reason} at step {i}"
            break
        state, t = nxt, t_next
        grid.append(t)
        rows.append(np.append(state, field.top(t, state)))
    return Trajectory(
        ode.independent, ode.dependent, ode.order, h, np.array(grid), np.array(rows), steps, halted
    )


# -- reduction residual ------------------------------------------------------------

def _push(trace: ReductionTrace, traj: Trajectory) -> list[np.ndarray | None]:
    """Reduced (t, u, u', ..., u^(m)) at each trajectory point, or None if guarded."""
    red = trace.reduced
    src_args = [traj.independent] + [jet_name(traj.dependent, k) for k in range(traj.order + 1)]
    targets = [red.independent] + [jet_name(red.dependent, k) for k in range(red.order + 1)]
    funcs, dens = [], []
    for name in targets:
        e = trace.inverse[name]
        funcs.append(compile_expr(e, src_args))
        dens.extend(compile_expr(d, src_args) for d in denominators(e))
    out: list[np.ndarray | None] = []
    for i in range(len(traj.grid)):
        vals = [traj.grid[i], *traj.jets[i]]
        try:
            if any(abs(d(*vals)) < GUARD for d in dens):
                out.append(None)
                continue
            out.append(np.array([float(fn(*vals)) for fn in funcs]))
        except _FLOAT_ERRORS:
            out.append(None)
    return out


def reduction_residual(trace: ReductionTrace, traj: Trajectory) -> ResidualStats:
    """Check that the pushed-forward trajectory solves the reduced ODE.

    Each point's residual combines (a) the reduced ODE evaluated on the pushed
    jets (top derivative minus right-hand side) and (b) the deviation of the
    pushed jets from an RK4 solution of the reduced ODE started at the first
    pushed point and stepped along the pushed abscissae.  Part (b) exposes
    the integrator's order: it shrinks about 16x when h is halved.
    """
    red = trace.reduced
    field = _Field(red)
    pushed = _push(trace, traj)
    same_grid = red.independent == traj.independent
    values: list[float | None] = []
    flow = None
    prev_t = None
    for i, p in enumerate(pushed):
        if p is None:
            values.append(None)
            flow = None
            continue
        t, state, top = p[0], p[1:-1], p[-1]
        if field.guarded(t, state):
            values.append(None)
            flow = None
            continue
        try:
            pointwise = abs(top - field.top(t, state))
            if flow is None:
                flow, drift = state.copy(), 0.0
            else:
                dt = traj.h if same_grid else t - prev_t
                flow = field.step(prev_t, flow, dt)
                drift = float(np.max(np.abs(flow - state)))
        except _STEP_ERRORS:
            values.append(None)
            flow = None
            continue
        prev_t = t
        values.append(max(pointwise, drift))
    return ResidualStats.from_values(values)


# -- solution residual -------------------------------------------------------------

def _candidate_jets(
    ode: NormalizedOde, candidate: sp.Expr, implicit: bool
) -> tuple[sp.Symbol, sp.Expr, list[sp.Expr]]:
    """Abscissa symbol, independent-variable value, and jets 0..n along the family."""
    x, y = var(ode.independent), var(ode.dependent)
    if not implicit:
        jets = [candidate]
        for _ in range(ode.order):
            jets.append(sp.diff(jets[-1], x))
        return x, x, jets
    # x = g(y): dy/dx = 1/g_y, and d/dx = (dy/dx) d/dy along the curve
    slope = 1 / sp.diff(candidate, y)
    jets = [y, slope]
    for _ in range(ode.order - 1):
        jets.append(slope * sp.diff(jets[-1], y))
    return y, candidate, jets


def solution_residual(
    ode: NormalizedOde,
    candidate: sp.Expr,
    constants: Sequence[str],
    samples: int = 16,
    seed: int = 0,
    implicit: bool = False,
    abscissae: Sequence[float] | None = None,
) -> ResidualStats:
    """Scaled residual ``|top - f| / max(1, |top|, |f|)`` along a closed-form family.

    An explicit candidate gives the dependent variable in terms of the
    independent one; an implicit candidate gives the independent variable in
    terms of the dependent one.  Points where the family or f is singular are
    skipped.
    """
    allowed = {ode.independent, ode.dependent, *constants}
    unknown = names(candidate) - allowed
    if unknown:
        raise ValueError(f"candidate mentions unknown symbols {sorted(unknown)}")
    if abscissae is None:
        abscissae = np.linspace(0.5, 1.5, 8)
    s, indep, jets = _candidate_jets(ode, candidate, implicit)
    bindings = {ode.independent: indep}
    bindings.update({jet_name(ode.dependent, k): jets[k] for k in range(ode.order)})
    f_along = substitute(ode.rhs, bindings)
    args = [str(s), *constants]
    top_fn = compile_expr(jets[ode.order], args)
    f_fn = compile_expr(f_along, args)
    guards = [compile_expr(d, args) for d in denominators(f_along) + denominators(jets[ode.order])]

    rng = np.random.default_rng(seed)
    values: list[float | None] = []
    for _ in range(samples):
        consts = rng.uniform(-1.0, 1.0, len(constants))
        for t in abscissae:
            vals = (float(t), *consts)
            try:
                if any(abs(g(*vals)) < GUARD for g in guards):
                    values.append(None)
                    continue
                top, f = float(top_fn(*vals)), float(f_fn(*vals))
            except _FLOAT_ERRORS:
                values.append(None)
                continue
            r = abs(top - f) / max(1.0, abs(top), abs(f))
            values.append(r if math.isfinite(r) else None)
    return ResidualStats.from_values(values)


def convergence_ratio(measure: Callable[[float], float], h: float) -> float:
    """measure(h) / measure(h/2); about 16 for a fourth-order error."""
    return measure(h) / measure(h / 2)


def initial_from(mapping: Mapping[str, float], ode: NormalizedOde) -> list[float]:
    return [float(mapping[jet_name(ode.dependent, k)]) for k in range(ode.order)]
