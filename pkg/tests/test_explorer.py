from collections import deque

import pytest

from conftest import train_interpretation
from ebadt.explorer import (
    MachineState, Step, enabled, explore, format_trace, initial_state, replay_trace,
    state_limit_from_env, step,
)
from ebadt.interp import Environment, eval_pred
from ebadt.obligations import machine_obligations
from ebadt.parser import parse_machine
from ebadt.values import EMPTY, Atom, FinSet, Pair

T1, T2 = Atom("TRAIN_ID", 1), Atom("TRAIN_ID", 2)
A, B, C = (Atom("SECTION", i) for i in (1, 2, 3))


def train_value(a, b, cells):
    return Pair(Pair(a, b), FinSet(Pair(i, s) for i, s in cells.items()))


def state_of(**trains):
    ids = {"T1": T1, "T2": T2}
    return MachineState((("trains", FinSet(Pair(ids[k], v) for k, v in trains.items())),))


def test_initial_state_is_empty():
    mi, _, interp = train_interpretation(train_ids=1)
    assert initial_state(mi, interp) == MachineState((("trains", EMPTY),))


def test_initialisation_evaluates_expressions():
    mch = parse_machine("machine M variables x invariants i: x : INT events INITIALISATION then x := 1 + 1 end end")
    _, _, interp = train_interpretation()
    assert initial_state(mch, interp)["x"] == 2


def test_enter_offered_for_each_section():
    mi, _, interp = train_interpretation(train_ids=1)
    options = enabled(mi, initial_state(mi, interp), interp)
    assert [(e.name, p) for e, p in options] == [
        ("enter", (("t", T1), ("s", s))) for s in (A, B, C)]


def test_step_enter_then_extend_head():
    mi, _, interp = train_interpretation(train_ids=1)
    st0 = initial_state(mi, interp)
    st1 = step(mi, st0, "enter", (("t", T1), ("s", A)), interp)
    assert st1 == state_of(T1=train_value(1, 1, {1: A}))
    st2 = step(mi, st1, "extend_head", (("t", T1), ("s", B)), interp)
    assert st2 == state_of(T1=train_value(0, 1, {0: B, 1: A}))


def test_remove_rear_disabled_for_single_section_train():
    mi, _, interp = train_interpretation(train_ids=1)
    st = state_of(T1=train_value(1, 1, {1: B}))
    names = {e.name for e, _ in enabled(mi, st, interp)}
    assert "remove_rear" not in names
    st = state_of(T1=train_value(0, 1, {0: C, 1: B}))
    assert ("remove_rear", (("t", T1),)) in {(e.name, p) for e, p in enabled(mi, st, interp)}


def test_extend_head_follows_network_and_avoids_occupied():
    mi, _, interp = train_interpretation(train_ids=2)
    # T1 on B, T2 on C: only A is both adjacent to B and free
    st = state_of(T1=train_value(1, 1, {1: B}), T2=train_value(1, 1, {1: C}))
    ext = [p for e, p in enabled(mi, st, interp) if e.name == "extend_head"]
    assert ext == [(("t", T1), ("s", A))]
    # T2 on C can only extend to B, which T1 holds
    assert not any(dict(p)["t"] == T2 for p in ext)


def test_step_format():
    _, _, interp = train_interpretation()
    s = Step("enter", (("t", T1), ("s", A)))
    assert s.show(interp.cfg.atom_names) == "enter(t=TRAIN_ID1, s=A)"
    text = format_trace((s,), state_of(T1=train_value(1, 1, {1: A})), interp.cfg.atom_names)
    assert text.splitlines() == ["enter(t=TRAIN_ID1, s=A)", "state: trains = {TRAIN_ID1 |-> (1 |-> 1 |-> {1 |-> A})}"]


# ---------------------------------------------------------------- oracle
#
# An independent simulation of the train system on the linear A-B-C network
# with plain Python tuples: a train is (a, b, {index: section}).

NETWORK = {("A", "B"), ("B", "A"), ("B", "C"), ("C", "B")}
SECTIONS = ("A", "B", "C")


def _area(train):
    return set(train[2].values())


def _moves(trains, ids, guard_free_on_enter=True):
    trains = dict(trains)
    occupied = set().union(*map(_area, trains.values())) if trains else set()
    for t in ids:
        if t not in trains:
            for s in SECTIONS:
                if s not in occupied or not guard_free_on_enter:
                    yield {**trains, t: (1, 1, {1: s})}
    for t in ids:
        if t in trains:
            a, b, f = trains[t]
            for s in SECTIONS:
                if s not in occupied and (s, f[a]) in NETWORK:
                    yield {**trains, t: (a - 1, b, {**f, a - 1: s})}
    for t in ids:
        if t in trains:
            a, b, f = trains[t]
            if f[a] != f[b]:
                yield {**trains, t: (a, b - 1, {i: x for i, x in f.items() if i != b})}


def _freeze(trains):
    return frozenset((t, (a, b, frozenset(f.items()))) for t, (a, b, f) in trains.items())


def _thaw(frozen):
    return {t: (a, b, dict(f)) for t, (a, b, f) in frozen}


def _in_bounds(trains, lo, hi):
    return all(lo <= x <= hi for a, b, f in trains.values() for x in (a, b, *f))


def _collides(trains):
    ts = list(trains.values())
    return any(_area(x) & _area(y) for i, x in enumerate(ts) for y in ts[i + 1:])


def oracle(n_ids, depth, lo, hi, guard_free_on_enter=True):
    ids = [f"T{i}" for i in range(1, n_ids + 1)]
    init = _freeze({})
    seen, queue = {init}, deque([(init, 0)])
    visited = transitions = oob = violations = 0
    while queue:
        frozen, d = queue.popleft()
        visited += 1
        trains = _thaw(frozen)
        if not _in_bounds(trains, lo, hi):
            oob += 1
            continue
        if _collides(trains):
            violations += 1
            continue
        if d == depth:
            continue
        for nxt in _moves(trains, ids, guard_free_on_enter):
            transitions += 1
            key = _freeze(nxt)
            if key not in seen:
                seen.add(key)
                queue.append((key, d + 1))
    return visited, transitions, oob, violations


@pytest.mark.parametrize("n_ids,depth,lo,hi", [(1, 6, -3, 5), (2, 4, -3, 5), (2, 6, -3, 5), (2, 6, -1, 3)])
def test_state_counts_match_oracle(n_ids, depth, lo, hi):
    mi, _, interp = train_interpretation(train_ids=n_ids, int_min=lo, int_max=hi)
    r = explore(mi, interp, depth)
    assert (r.states_visited, r.transitions, r.out_of_bounds, len(r.violations)) == oracle(n_ids, depth, lo, hi)
    assert r.frontier_exhausted


def test_bug_machine_counts_match_oracle():
    mi, _, interp = train_interpretation(train_ids=2, machine_file="train_machine_bug")
    r = explore(mi, interp, 6)
    visited, transitions, oob, violations = oracle(2, 6, -3, 5, guard_free_on_enter=False)
    assert (r.states_visited, r.transitions, r.out_of_bounds) == (visited, transitions, oob)
    assert len(r.violations) == violations > 0
    assert {v.invariant for v in r.violations} == {"collision_free"}


def test_violation_traces_replay():
    mi, _, interp = train_interpretation(train_ids=2, machine_file="train_machine_bug")
    r = explore(mi, interp, 6)
    for v in r.violations[:10]:
        assert replay_trace(mi, interp, v.trace) == v.state
    first = r.violations[0]
    assert [s.show(interp.cfg.atom_names) for s in first.trace] == [
        "enter(t=TRAIN_ID1, s=A)", "enter(t=TRAIN_ID2, s=A)"]


def test_replay_rejects_disabled_step():
    mi, _, interp = train_interpretation(train_ids=1)
    with pytest.raises(ValueError):
        replay_trace(mi, interp, (Step("remove_rear", (("t", T1),)),))


def test_violation_step_falsifies_the_obligation():
    """The step that enters a violating state is a counterexample to the
    matching invariant-preservation obligation."""
    mi, ctxs, interp = train_interpretation(train_ids=2, int_min=-2, int_max=3, machine_file="train_machine_bug")
    v = explore(mi, interp, 6).violations[0]
    pre = replay_trace(mi, interp, v.trace[:-1])
    last = v.trace[-1]
    po = next(p for p in machine_obligations(mi, ctxs) if p.label == f"INV/{last.event}/{v.invariant}")
    env = Environment({**interp.values, **pre.as_dict(), **dict(last.params)}, interp.cfg)
    assert all(eval_pred(h, env) for _, h in po.hypotheses)
    assert not eval_pred(po.goal, env)


def test_depth_zero_visits_only_initial_state():
    mi, _, interp = train_interpretation()
    r = explore(mi, interp, 0)
    assert (r.states_visited, r.transitions, r.depth_reached) == (1, 0, 0)


def test_state_limit_truncates():
    mi, _, interp = train_interpretation()
    r = explore(mi, interp, 6, state_limit=5)
    assert not r.frontier_exhausted
    assert r.states_visited == 5


def test_state_limit_from_environment(monkeypatch):
    monkeypatch.setenv("EBADT_STATE_LIMIT", "4")
    assert state_limit_from_env() == 4
    mi, _, interp = train_interpretation()
    r = explore(mi, interp, 6)
    assert r.states_visited == 4 and not r.frontier_exhausted
    monkeypatch.setenv("EBADT_STATE_LIMIT", "0")
    with pytest.raises(ValueError):
        state_limit_from_env()
    monkeypatch.delenv("EBADT_STATE_LIMIT")
    assert state_limit_from_env() == 100_000


def test_negative_depth_rejected():
    mi, _, interp = train_interpretation()
    with pytest.raises(ValueError):
        explore(mi, interp, -1)
