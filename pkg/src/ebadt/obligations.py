"""Machine proof obligations and bounded discharge of obligations.

An obligation is checked against *interpretations* of its contexts: either
the single model computed from definitional axioms (``c = E``), or every
model of the axioms found by search (the enumerable path, for abstract
contexts at tiny bounds). Within an interpretation, the obligation's free
variables are enumerated from its hypotheses, and every solution of the
hypotheses must satisfy the goal.
"""

from __future__ import annotations

import graphlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import model as m
from .instantiation import ProofObligation, substitute
from .interp import (
    ApplicationError,
    Environment,
    EvaluationError,
    Evaluator,
    OutOfScope,
    UniverseConfig,
    UniverseTooLarge,
    UnsupportedQuantifier,
    carrier_env,
    eval_pred,
    make_plan,
)
from .model import Diagnostic, DiagnosticError
from .values import Atom, show_value

VALID = "valid-within-bounds"
COUNTEREXAMPLE = "counterexample"
UNSUPPORTED = "unsupported"
TOO_LARGE = "universe-too-large"

# Worst verdict first; used to aggregate exit statuses.
SEVERITY = {VALID: 0, COUNTEREXAMPLE: 1, UNSUPPORTED: 2, TOO_LARGE: 2}


@dataclass(frozen=True)
class CheckResult:
    po_label: str
    verdict: str
    witness: Environment | None = None
    # Names worth showing from the witness: obligation variables, lifted
    # quantifier variables and (for searched models) the constants.
    shown: tuple = ()
    stats: dict = field(default_factory=dict)
    message: str = ""

    def to_json(self) -> dict:
        rec = {"label": self.po_label, "verdict": self.verdict}
        if self.witness is not None:
            names = self.witness.cfg.atom_names
            rec["witness"] = {n: show_value(self.witness[n], names) for n in self.shown if n in self.witness}
        else:
            rec["witness"] = None
        if self.message:
            rec["message"] = self.message
        rec["stats"] = dict(self.stats)
        return rec


@dataclass(frozen=True)
class ConcreteInterpretation:
    """One model of a list of contexts."""

    values: dict
    cfg: UniverseConfig
    # (label, predicate) pairs known to hold, so checks need not re-test them.
    established: frozenset = frozenset()
    # Constants whose values were found by search rather than definition.
    searched: tuple = ()

    @property
    def environment(self) -> Environment:
        return Environment(dict(self.values), self.cfg)


# ----------------------------------------------------------- interpretations


def _all_axioms(contexts):
    return [(lbl, p) for ctx in contexts for lbl, p in ctx.axioms]


def enumerated_carriers(contexts) -> dict:
    """Carriers fixed by an axiom ``S = {a, b, c}`` listing distinct constants.

    Returns carrier name -> (axiom label, tuple of constant names).
    """
    carriers, constants = set(), set()
    for ctx in contexts:
        carriers.update(ctx.carrier_sets)
        constants.update(ctx.constants)
    found = {}
    for lbl, p in _all_axioms(contexts):
        if not isinstance(p, m.Equal):
            continue
        for lhs, rhs in ((p.left, p.right), (p.right, p.left)):
            if (isinstance(lhs, m.Identifier) and lhs.name in carriers and isinstance(rhs, m.SetExtension)
                    and all(isinstance(x, m.Identifier) and x.name in constants for x in rhs.members)):
                names = tuple(x.name for x in rhs.members)
                if len(set(names)) == len(names) and lhs.name not in found:
                    found[lhs.name] = (lbl, names)
    return found


def resolve_universe(contexts, cfg: UniverseConfig, default_size: int | None = None) -> UniverseConfig:
    """Fix carrier sizes: enumerated carriers take their listed atoms, the
    rest keep the configured size or ``default_size``."""
    diags = []
    names = {}
    for carrier, (lbl, consts) in enumerated_carriers(contexts).items():
        size = cfg.carrier_sizes.get(carrier)
        if size is not None and size != len(consts):
            diags.append(Diagnostic("carrier-size-conflict",
                                    f"{carrier} is configured with {size} elements but axiom {lbl} lists {len(consts)}"))
        names[carrier] = cfg.atom_names.get(carrier, consts) if size == len(consts) else consts
    sizes = {}
    for ctx in contexts:
        for carrier in ctx.carrier_sets:
            if carrier not in names and carrier not in cfg.carrier_sizes:
                if default_size is None:
                    diags.append(Diagnostic("missing-carrier-size", f"no size configured for carrier set {carrier}"))
                else:
                    sizes[carrier] = default_size
    if diags:
        raise DiagnosticError(diags)
    return cfg.with_carriers(sizes, names)


def _definitions(contexts, constants, skip_labels):
    """First ``c = E`` axiom per constant (E not mentioning c)."""
    defs = {}
    for lbl, p in _all_axioms(contexts):
        if lbl in skip_labels or not isinstance(p, m.Equal):
            continue
        for lhs, rhs in ((p.left, p.right), (p.right, p.left)):
            if (isinstance(lhs, m.Identifier) and lhs.name in constants and lhs.name not in defs
                    and lhs.name not in m.free_identifiers(rhs)):
                defs[lhs.name] = (lbl, p, rhs)
                break
    return defs


def _base_env(contexts, cfg):
    carriers = [c for ctx in contexts for c in ctx.carrier_sets]
    env = carrier_env(cfg, carriers)
    fixed, used = {}, set()
    for carrier, (lbl, consts) in enumerated_carriers(contexts).items():
        for i, name in enumerate(consts, start=1):
            fixed[name] = Atom(carrier, i)
        used.add(lbl)
    env.update(fixed)
    return env, used


def _evaluate_definitions(contexts, cfg, env, used, defs):
    """Evaluate definitions in dependency order, then test the other axioms.

    Returns the environment, the established (label, predicate) pairs and a
    list of (label, Diagnostic) for axioms that fail or are undetermined.
    """
    axioms = _all_axioms(contexts)
    ev = Evaluator(cfg)
    established = {(lbl, p) for lbl, p in axioms if lbl in used}
    order = graphlib.TopologicalSorter({c: m.free_identifiers(defs[c][2]) & defs.keys() for c in defs})
    try:
        ordered = list(order.static_order())
    except graphlib.CycleError as exc:
        cycle = exc.args[1]
        raise DiagnosticError([Diagnostic("cyclic-definition", "cyclic definitions: " + " -> ".join(cycle))]) from None
    for c in ordered:
        lbl, p, rhs = defs[c]
        env[c] = ev.expr(rhs, env)
        established.add((lbl, p))
    failures = []
    for lbl, p in axioms:
        if (lbl, p) in established:
            continue
        try:
            ok = ev.pred(p, env)
        except OutOfScope:
            failures.append((lbl, Diagnostic("axiom-undetermined", f"axiom {lbl} cannot be decided within the bounds")))
            continue
        if not ok:
            failures.append((lbl, Diagnostic("axiom-false", f"axiom {lbl} is false under the definitions")))
            continue
        established.add((lbl, p))
    return env, frozenset(established), failures


def concrete_interpretations(contexts, cfg: UniverseConfig, enumerable: bool = False, budget: int | None = None):
    """Yield the interpretations of ``contexts`` (ancestors first).

    ``cfg`` must already size every carrier (see :func:`resolve_universe`).
    Definitional contexts yield exactly one interpretation; a false axiom
    raises a DiagnosticError (``axiom-false``) naming it. With
    ``enumerable`` every model of the axioms is yielded, searching over the
    constants that lack a definition.
    """
    contexts = list(contexts)
    env, used = _base_env(contexts, cfg)
    constants = [c for ctx in contexts for c in ctx.constants if c not in env]
    axioms = _all_axioms(contexts)
    defs = _definitions(contexts, set(constants), used)
    missing = [c for c in constants if c not in defs]
    if missing and not enumerable:
        raise DiagnosticError([Diagnostic("not-definitional", f"constant {c!r} has no defining axiom of the form "
                                                             f"{c} = <expression>") for c in missing])
    if not enumerable:
        env, established, failures = _evaluate_definitions(contexts, cfg, env, used, defs)
        if failures:
            raise DiagnosticError([d for _, d in failures])
        yield ConcreteInterpretation(env, cfg, established)
        return

    ev = Evaluator(cfg)
    conj = [c for lbl, p in axioms if lbl not in used for c in m.conjuncts(p)]
    plan = ev.plan_for(tuple(conj), constants, conj)
    budget = cfg.max_enumeration if budget is None else budget
    all_established = frozenset(axioms)
    for _ in ev.solutions(plan, env, budget):
        yield ConcreteInterpretation(dict(env), cfg, all_established, tuple(constants))


@dataclass(frozen=True)
class InterpretationSource:
    """Picklable recipe for the interpretations an obligation is checked in."""

    contexts: tuple
    cfg: UniverseConfig
    enumerable: bool = False

    def __iter__(self):
        return concrete_interpretations(self.contexts, self.cfg, self.enumerable)


# ------------------------------------------------------------ obligations


def machine_obligations(mch: m.MachineDef, ctxs) -> list[ProofObligation]:
    """INIT/<inv> for each invariant, then INV/<event>/<inv> per event."""
    axioms = tuple(_all_axioms(ctxs))
    pos = []

    def after(evt):
        return {a.variable: a.desugar().value for a in evt.actions}

    init = mch.initialisation
    sigma = after(init)
    for lbl, inv in mch.invariants:
        pos.append(ProofObligation(f"INIT/{lbl}", axioms, substitute(inv, sigma), "initialisation"))
    for evt in mch.events:
        if evt is init or evt.name == init.name:
            continue
        sigma = after(evt)
        hyps = axioms + tuple(mch.invariants) + tuple(evt.guards)
        variables = tuple(mch.variables) + tuple(evt.parameters)
        for lbl, inv in mch.invariants:
            pos.append(ProofObligation(f"INV/{evt.name}/{lbl}", hyps, substitute(inv, sigma),
                                       "invariant-preservation", variables))
    return pos


def _lift(goal, avoid):
    """Turn ``!x . P => Q`` goals into extra variables and hypotheses.

    Gives witnesses for the quantified variables, not just the enclosing
    state. Bound names clashing with ``avoid`` are renamed.
    """
    variables, hyps = [], []
    avoid = set(avoid)
    while isinstance(goal, m.ForAll) and isinstance(goal.body, m.Implies):
        renames = {}
        for v in goal.bound_vars:
            new = v
            i = 0
            while new in avoid:
                new = f"{v}{i}"
                i += 1
            avoid.add(new)
            renames[v] = new
        body = substitute(goal.body, {v: m.Identifier(n) for v, n in renames.items() if v != n})
        variables.extend(renames.values())
        hyps.extend(m.conjuncts(body.left))
        goal = body.right
    return variables, hyps, goal


def check_obligation(po: ProofObligation, source, cfg: UniverseConfig | None = None) -> CheckResult:
    """Discharge ``po`` by enumeration over every interpretation in ``source``.

    Stops at the first falsifying instance (in canonical enumeration order).
    Instances whose goal is undetermined because a value leaves the integer
    bounds are skipped and counted in ``stats["skipped"]``.
    """
    start = time.perf_counter()
    stats = {"interpretations": 0, "instances": 0, "skipped": 0}

    def done(verdict, witness=None, shown=(), message=""):
        stats["elapsed"] = round(time.perf_counter() - start, 4)
        return CheckResult(po.label, verdict, witness, tuple(shown), stats, message)

    ev = None
    try:
        for interp in source:
            stats["interpretations"] += 1
            ev = Evaluator(interp.cfg)
            hyps = [c for lbl, p in po.hypotheses if (lbl, p) not in interp.established
                    for c in m.conjuncts(p)]
            avoid = set(interp.values) | set(po.variables) | m.free_identifiers(po.goal)
            lifted, extra, goal = _lift(po.goal, avoid)
            variables = list(po.variables)
            try:
                plan = make_plan(variables + lifted, hyps + extra)
            except UnsupportedQuantifier:
                lifted, extra, goal = [], [], po.goal
                plan = make_plan(variables, hyps)
            env = dict(interp.values)
            for _ in ev.solutions(plan, env):
                stats["instances"] += 1
                message = ""
                try:
                    holds = ev.pred(goal, env)
                except OutOfScope:
                    ev.skipped += 1
                    continue
                except ApplicationError as exc:
                    holds, message = False, f"goal is ill-defined: {exc}"
                if not holds:
                    stats["skipped"] += ev.skipped
                    shown = list(interp.searched) + variables + lifted
                    return done(COUNTEREXAMPLE, Environment(dict(env), interp.cfg), shown, message)
            stats["skipped"] += ev.skipped
    except UnsupportedQuantifier as exc:
        return done(UNSUPPORTED, message=str(exc))
    except UniverseTooLarge as exc:
        return done(TOO_LARGE, message=str(exc))
    except DiagnosticError as exc:
        return done(UNSUPPORTED, message="; ".join(d.message for d in exc.diagnostics))
    except EvaluationError as exc:
        return done(UNSUPPORTED, message=f"evaluation error: {exc}")
    return done(VALID)


def replay(po: ProofObligation, result: CheckResult) -> bool:
    """True iff the witness makes every hypothesis true and the goal false
    (or ill-defined: a function applied outside its domain)."""
    if result.witness is None:
        return False
    env = result.witness
    if not all(eval_pred(p, env) for _, p in po.hypotheses):
        return False
    try:
        return not eval_pred(po.goal, env)
    except ApplicationError:
        return True


def _check_one(args):
    po, source = args
    return check_obligation(po, source)


def check_all(pos, source, jobs: int = 1) -> list[CheckResult]:
    """Check every obligation; results come back in obligation order."""
    pos = list(pos)
    if jobs > 1 and len(pos) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_check_one, [(po, source) for po in pos]))
    return [check_obligation(po, source) for po in pos]


def worst_verdict(results) -> str:
    if not results:
        return VALID
    return max((r.verdict for r in results), key=SEVERITY.__getitem__)


# -------------------------------------------------------- context checking


def check_context(contexts, cfg: UniverseConfig, enumerable: bool = False) -> list[CheckResult]:
    """Check a context's theorems (and, for definitional contexts, that all
    axioms hold under the definitions) within the bounds.

    Raises DiagnosticError for non-definitional or cyclic contexts.
    """
    contexts = list(contexts)
    results = []
    if not enumerable:
        start = time.perf_counter()
        env, used = _base_env(contexts, cfg)
        constants = {c for ctx in contexts for c in ctx.constants if c not in env}
        defs = _definitions(contexts, constants, used)
        missing = sorted(constants - defs.keys())
        if missing:
            raise DiagnosticError([Diagnostic("not-definitional", f"constant {c!r} has no defining axiom")
                                   for c in missing])
        env, established, failures = _evaluate_definitions(contexts, cfg, env, used, defs)
        elapsed = round(time.perf_counter() - start, 4)
        bad = dict(failures)
        for lbl, _ in _all_axioms(contexts):
            d = bad.get(lbl)
            if d is None:
                results.append(CheckResult(f"AXM/{lbl}", VALID, stats={"interpretations": 1, "elapsed": elapsed}))
            else:
                verdict = COUNTEREXAMPLE if d.code == "axiom-false" else UNSUPPORTED
                results.append(CheckResult(f"AXM/{lbl}", verdict, message=d.message))
        if failures:
            return results
        source = [ConcreteInterpretation(env, cfg, established)]
    else:
        source = InterpretationSource(tuple(contexts), cfg, True)
    axioms = tuple(_all_axioms(contexts))
    for ctx in contexts:
        for lbl, thm in ctx.theorems:
            po = ProofObligation(f"THM/{lbl}", axioms, thm, "theorem")
            results.append(check_obligation(po, source))
    return results
