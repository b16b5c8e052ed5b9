"""Generic instantiation of contexts.

A binding maps every carrier set of an abstract context to a type expression
over the concrete context and every abstract constant to a concrete
expression. Instantiating an abstract axiom is plain capture-avoiding
substitution; soundness asks that each instantiated axiom follows from the
concrete axioms.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import model as m
from .model import Diagnostic, DiagnosticError
from .parser import Binding, show_expr

__all__ = [
    "Binding", "BindingError", "ValidatedBinding", "ProofObligation",
    "validate_binding", "substitute", "instantiation_obligations",
    "machine_instantiate", "scope_of",
]


class BindingError(DiagnosticError):
    pass


@dataclass(frozen=True)
class ValidatedBinding:
    abstract_context: str
    concrete_context: str
    set_bindings: tuple  # (name, TypeExpr) pairs
    constant_bindings: tuple  # (name, Expression) pairs

    @property
    def mapping(self) -> dict:
        """Abstract identifier to replacement expression."""
        out = {name: m.type_to_expr(t) for name, t in self.set_bindings}
        out.update(self.constant_bindings)
        return out


@dataclass(frozen=True)
class ProofObligation:
    label: str
    hypotheses: tuple  # (label, Predicate) pairs
    goal: m.Predicate
    origin: str  # instantiation, theorem, invariant-preservation, initialisation
    # Free names of the sequent that range over a type rather than being
    # fixed by an interpretation (machine variables and event parameters).
    variables: tuple = ()


def scope_of(contexts) -> tuple[set, set]:
    """Carrier sets and constants declared across ``contexts``."""
    carriers, constants = set(), set()
    for ctx in contexts:
        carriers.update(ctx.carrier_sets)
        constants.update(ctx.constants)
    return carriers, constants


def validate_binding(abstract, concrete, binding: Binding, library=None) -> ValidatedBinding:
    """Check a binding for totality, type-expression targets and scoping.

    ``abstract`` and ``concrete`` are contexts; ``library`` resolves their
    ``extends`` chains (inherited names must be bound too). Raises
    :class:`BindingError` listing every problem found.
    """
    library = dict(library or {})
    library.setdefault(abstract.name, abstract)
    library.setdefault(concrete.name, concrete)
    abs_carriers, abs_constants = scope_of(m.context_closure([abstract.name], library))
    conc_carriers, conc_constants = scope_of(m.context_closure([concrete.name], library))
    conc_scope = conc_carriers | conc_constants
    spans = binding.spans or {}
    diags = []

    def diag(code, message, name=None):
        diags.append(Diagnostic(code, message, spans.get(name)))

    if binding.abstract_context != abstract.name:
        diag("context-mismatch", f"binding instantiates {binding.abstract_context!r}, not {abstract.name!r}")
    if binding.concrete_context != concrete.name:
        diag("context-mismatch", f"binding targets {binding.concrete_context!r}, not {concrete.name!r}")

    sets = []
    for name in sorted(abs_carriers - set(binding.set_bindings)):
        diag("missing-binding", f"abstract carrier set {name!r} is not bound")
    for name in sorted(abs_constants - set(binding.constant_bindings)):
        diag("missing-binding", f"abstract constant {name!r} is not bound")

    for name, value in binding.set_bindings.items():
        if name not in abs_carriers:
            code = "wrong-binding-kind" if name in abs_constants else "unknown-binding-target"
            diag(code, f"{name!r} is not a carrier set of {abstract.name!r}", name)
            continue
        if isinstance(value, m.TypeExpr):
            value = m.type_to_expr(value)
        unknown = m.free_identifiers(value) - conc_scope
        if unknown:
            diag("unknown-identifier", f"set {name}: unknown identifier(s) {', '.join(sorted(unknown))}", name)
            continue
        t = m.expr_to_type(value, conc_carriers)
        if t is None:
            what = show_expr(value)
            if isinstance(value, m.Identifier) and value.name in conc_constants:
                what = f"the constant {value.name!r}"
            diag("not-a-type-expression",
                 f"carrier set {name!r} can only be instantiated by a type expression, not {what}", name)
            continue
        sets.append((name, t))

    consts = []
    for name, value in binding.constant_bindings.items():
        if name not in abs_constants:
            code = "wrong-binding-kind" if name in abs_carriers else "unknown-binding-target"
            diag(code, f"{name!r} is not a constant of {abstract.name!r}", name)
            continue
        unknown = m.free_identifiers(value) - conc_scope
        if unknown:
            diag("unknown-identifier", f"const {name}: unknown identifier(s) {', '.join(sorted(unknown))}", name)
            continue
        consts.append((name, value))

    if diags:
        raise BindingError(diags)
    return ValidatedBinding(abstract.name, concrete.name, tuple(sets), tuple(consts))


# --------------------------------------------------------------- substitution


def _fresh(base: str, avoid) -> str:
    i = 0
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


def substitute(term, binding) -> m.Term:
    """Replace free identifiers per ``binding`` (a ValidatedBinding or a
    name-to-Expression dict), renaming bound variables that would capture a
    free identifier of a replacement."""
    sigma = binding.mapping if isinstance(binding, ValidatedBinding) else dict(binding)
    return _subst(term, sigma)


def _subst(node, sigma):
    if not sigma:
        return node
    if isinstance(node, m.Identifier):
        return sigma.get(node.name, node)
    if isinstance(node, m.BINDERS):
        inner = {k: v for k, v in sigma.items() if k not in node.bound_vars}
        relevant = m.free_identifiers(node) & inner.keys()
        inner = {k: inner[k] for k in relevant}
        if not inner:
            return node
        captured = set()
        for k in relevant:
            captured |= m.free_identifiers(inner[k])
        clash = [v for v in node.bound_vars if v in captured]
        if clash:
            avoid = set(captured) | m.all_identifiers(node) | set(inner)
            renames = {}
            for v in clash:
                new = _fresh(v, avoid)
                avoid.add(new)
                renames[v] = new
            inner.update({v: m.Identifier(n) for v, n in renames.items()})
            bound = tuple(renames.get(v, v) for v in node.bound_vars)
            node = replace(node, bound_vars=bound)
        return m.map_children(node, lambda c: _subst(c, inner))
    return m.map_children(node, lambda c: _subst(c, sigma))


# ---------------------------------------------------------------- obligations


def instantiation_obligations(abstract, concrete, vb: ValidatedBinding, library=None) -> list[ProofObligation]:
    """One obligation per abstract axiom and theorem: the concrete axioms
    must entail the instantiated abstract predicate."""
    library = dict(library or {})
    library.setdefault(abstract.name, abstract)
    library.setdefault(concrete.name, concrete)
    hyps = tuple((lbl, p) for ctx in m.context_closure([concrete.name], library) for lbl, p in ctx.axioms)
    pos = []
    for ctx in m.context_closure([abstract.name], library):
        for origin, items in (("instantiation", ctx.axioms), ("theorem", ctx.theorems)):
            for label, pred in items:
                pos.append(ProofObligation(f"INST/{label}", hyps, substitute(pred, vb), origin))
    return pos


def instantiate_context(ctx: m.ContextDef, vb: ValidatedBinding, library) -> m.ContextDef:
    """Rewrite a context that extends the abstract context so that it
    extends the concrete one instead."""
    extends = []
    for parent in ctx.extends:
        if parent == vb.abstract_context:
            extends.append(vb.concrete_context)
        else:
            extends.append(parent)
    return replace(
        ctx,
        extends=tuple(extends),
        axioms=tuple((lbl, substitute(p, vb)) for lbl, p in ctx.axioms),
        theorems=tuple((lbl, substitute(p, vb)) for lbl, p in ctx.theorems),
    )


def machine_instantiate(mch: m.MachineDef, vb: ValidatedBinding, library) -> tuple[m.MachineDef, dict]:
    """Instantiate a machine and every seen context built on the abstract one.

    Returns the rewritten machine and an updated library. Contexts that
    extend the abstract context (directly or not) are rewritten in place of
    their originals; the abstract context itself is replaced by the
    concrete one in ``sees``.
    """
    lib = dict(library)
    rewritten: dict[str, m.ContextDef] = {}

    def depends(name) -> bool:
        return name == vb.abstract_context or any(
            c.name == vb.abstract_context for c in m.context_closure([name], lib))

    for ctx in m.context_closure(mch.sees, lib):
        if ctx.name != vb.abstract_context and depends(ctx.name):
            rewritten[ctx.name] = instantiate_context(ctx, vb, lib)
    lib.update(rewritten)

    # Machine variables and event parameters shadow abstract names.
    sigma = {k: v for k, v in vb.mapping.items() if k not in mch.variables}

    def sub(term, local=sigma):
        return substitute(term, local)

    def inst_event(evt):
        if evt is None:
            return None
        local = {k: v for k, v in sigma.items() if k not in evt.parameters}
        sub = lambda term: substitute(term, local)  # noqa: E731
        return replace(
            evt,
            guards=tuple((lbl, sub(p)) for lbl, p in evt.guards),
            actions=tuple(replace(a, value=sub(a.value), index=None if a.index is None else sub(a.index))
                          for a in evt.actions),
        )

    sees = tuple(vb.concrete_context if s == vb.abstract_context else s for s in mch.sees)
    new = replace(
        mch,
        sees=sees,
        invariants=tuple((lbl, sub(p)) for lbl, p in mch.invariants),
        events=tuple(inst_event(e) for e in mch.events),
        initialisation=inst_event(mch.initialisation),
    )
    return new, lib
