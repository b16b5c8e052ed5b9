"""Breadth-first animation of a machine under one interpretation.

Every reachable state up to a depth bound is visited once (states are
compared structurally) and all invariants are checked in it. Violating
states are reported with the event trace leading to them and are not
expanded further. States carrying integers outside the configured bounds
are counted but neither checked nor expanded, since the bounded universe
cannot judge them.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field

from . import model as m
from .interp import EvaluationError, Evaluator, OutOfScope, make_plan
from .values import show_value

DEFAULT_STATE_LIMIT = 100_000


@dataclass(frozen=True)
class MachineState:
    """Variable values, in the machine's declaration order."""

    items: tuple  # ((name, value), ...)

    def __getitem__(self, name):
        return dict(self.items)[name]

    def as_dict(self) -> dict:
        return dict(self.items)


@dataclass(frozen=True)
class Step:
    event: str
    params: tuple  # ((name, value), ...) in declaration order

    def show(self, atom_names=None) -> str:
        args = ", ".join(f"{n}={show_value(v, atom_names)}" for n, v in self.params)
        return f"{self.event}({args})"


@dataclass(frozen=True)
class Violation:
    state: MachineState
    invariant: str
    trace: tuple  # of Step
    message: str = ""


@dataclass
class ExplorationReport:
    states_visited: int = 0
    depth_reached: int = 0
    violations: list = field(default_factory=list)
    frontier_exhausted: bool = True
    out_of_bounds: int = 0
    transitions: int = 0


def state_limit_from_env(default: int = DEFAULT_STATE_LIMIT) -> int:
    raw = os.environ.get("EBADT_STATE_LIMIT")
    if not raw:
        return default
    value = int(raw)
    if value < 1:
        raise ValueError("EBADT_STATE_LIMIT must be positive")
    return value


def _env(mch, st: MachineState | None, interp) -> dict:
    env = dict(interp.values)
    if st is not None:
        env.update(st.items)
    return env


def _after(mch, evt, env, ev) -> MachineState:
    """Evaluate all assignments against the pre-state, simultaneously."""
    new = {a.variable: ev.expr(a.desugar().value, env) for a in evt.actions}
    return MachineState(tuple((v, new[v] if v in new else env[v]) for v in mch.variables))


def initial_state(mch: m.MachineDef, interp) -> MachineState:
    ev = Evaluator(interp.cfg)
    env = _env(mch, None, interp)
    return _after(mch, mch.initialisation, env, ev)


def enabled(mch: m.MachineDef, st: MachineState, interp) -> list:
    """Every (event, parameter tuple) whose guards hold in ``st``.

    Parameters are enumerated from the guards; events come in declaration
    order and parameters in canonical order.
    """
    ev = Evaluator(interp.cfg)
    env = _env(mch, st, interp)
    out = []
    for evt in mch.events:
        if evt.name == mch.initialisation.name:
            continue
        conj = [c for _, g in evt.guards for c in m.conjuncts(g)]
        plan = make_plan(evt.parameters, conj)
        for _ in ev.solutions(plan, env):
            out.append((evt, tuple((p, env[p]) for p in evt.parameters)))
    return out


def step(mch: m.MachineDef, st: MachineState, event, params, interp) -> MachineState:
    """Apply ``event`` (an EventDef or its name) with ``params``."""
    if isinstance(event, str):
        event = mch.event(event)
    ev = Evaluator(interp.cfg)
    env = _env(mch, st, interp)
    env.update(dict(params))
    return _after(mch, event, env, ev)


def check_invariants(mch, st: MachineState, interp) -> list:
    """Labels of violated invariants, with a message for ill-defined ones.

    Raises OutOfScope when the state cannot be judged within the bounds.
    """
    ev = Evaluator(interp.cfg)
    env = _env(mch, st, interp)
    bad = []
    for lbl, inv in mch.invariants:
        try:
            if not ev.pred(inv, env):
                bad.append((lbl, ""))
        except OutOfScope:
            raise
        except EvaluationError as exc:
            bad.append((lbl, f"ill-defined: {exc}"))
    return bad


def explore(mch: m.MachineDef, interp, max_depth: int, state_limit: int | None = None) -> ExplorationReport:
    """Breadth-first search from the initial state up to ``max_depth`` steps."""
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    limit = state_limit_from_env() if state_limit is None else state_limit
    cfg = interp.cfg
    report = ExplorationReport()
    init = initial_state(mch, interp)
    # state -> (parent state, Step) for trace reconstruction
    parents: dict = {init: None}
    queue = deque([(init, 0)])

    def trace_to(st):
        steps = []
        while parents[st] is not None:
            st, s = parents[st]
            steps.append(s)
        return tuple(reversed(steps))

    while queue:
        st, depth = queue.popleft()
        report.states_visited += 1
        report.depth_reached = max(report.depth_reached, depth)
        if not all(cfg.in_scope(v) for _, v in st.items):
            report.out_of_bounds += 1
            continue
        try:
            bad = check_invariants(mch, st, interp)
        except OutOfScope:
            report.out_of_bounds += 1
            continue
        if bad:
            trace = trace_to(st)
            report.violations.extend(Violation(st, lbl, trace, msg) for lbl, msg in bad)
            continue
        if depth == max_depth:
            continue
        for evt, params in enabled(mch, st, interp):
            report.transitions += 1
            nxt = step(mch, st, evt, params, interp)
            if nxt in parents:
                continue
            if len(parents) >= limit:
                report.frontier_exhausted = False
                continue
            parents[nxt] = (st, Step(evt.name, params))
            queue.append((nxt, depth + 1))
    return report


def replay_trace(mch: m.MachineDef, interp, trace) -> MachineState:
    """Re-run ``trace`` from the initial state, checking each step is enabled."""
    st = initial_state(mch, interp)
    for s in trace:
        options = {(evt.name, params) for evt, params in enabled(mch, st, interp)}
        if (s.event, s.params) not in options:
            raise ValueError(f"{s.show()} is not enabled")
        st = step(mch, st, s.event, s.params, interp)
    return st


def format_trace(trace, final: MachineState, atom_names=None) -> str:
    lines = [s.show(atom_names) for s in trace]
    lines.append("state: " + ", ".join(f"{n} = {show_value(v, atom_names)}" for n, v in final.items))
    return "\n".join(lines)
