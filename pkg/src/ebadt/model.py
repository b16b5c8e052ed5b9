"""Abstract syntax for the modelling language: expressions, predicates,
type expressions and the context/machine declarations built from them.

All nodes are frozen dataclasses, so structural equality is ``==`` and
nodes can be shared freely between checkers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Union

# Binary expression operators.
UNION = "union"
INTER = "intersection"
DIFF = "difference"
CPROD = "cartesian-product"
OVERRIDE = "relational-override"
DOMSUB = "domain-subtraction"
IMAGE = "relational-image"
PLUS = "plus"
MINUS = "minus"

BINARY_OPS = (UNION, INTER, DIFF, CPROD, OVERRIDE, DOMSUB, IMAGE, PLUS, MINUS)

# Unary expression operators.
POW = "powerset"
DOM = "domain"
RAN = "range"

UNARY_OPS = (POW, DOM, RAN)

# Function classes, shared by FunctionClass predicates and FunctionSpace sets.
TOTAL = "total"
PARTIAL = "partial"
TOTAL_INJ = "total-injective"
RELATION = "relation"

FUNCTION_CLASSES = (TOTAL, PARTIAL, TOTAL_INJ, RELATION)

# Arithmetic comparisons.
LT = "<"
LE = "<="
GT = ">"
GE = ">="

COMPARISONS = (LT, LE, GT, GE)


class Node:
    """Common base of expressions and predicates."""

    __slots__ = ()

    def children(self) -> Iterator[Node]:
        return iter(())


# ---------------------------------------------------------------- expressions


class Expression(Node):
    __slots__ = ()


@dataclass(frozen=True)
class IntegerLiteral(Expression):
    value: int


@dataclass(frozen=True)
class Identifier(Expression):
    name: str


@dataclass(frozen=True)
class BoolLiteral(Expression):
    value: bool


@dataclass(frozen=True)
class Maplet(Expression):
    left: Expression
    right: Expression

    def children(self):
        yield self.left
        yield self.right


@dataclass(frozen=True)
class SetExtension(Expression):
    members: tuple[Expression, ...]

    def children(self):
        yield from self.members


@dataclass(frozen=True)
class Comprehension(Expression):
    """``{x,y . constraint | body}``; the ``{body | constraint}`` shape is
    normalised into this form by the parser."""

    bound_vars: tuple[str, ...]
    constraint: Predicate
    body: Expression
    # Records which surface shape was written, so printing round-trips.
    body_first: bool = False

    def __post_init__(self):
        if len(set(self.bound_vars)) != len(self.bound_vars):
            raise ValueError(f"duplicate bound variables {self.bound_vars}")

    def children(self):
        yield self.constraint
        yield self.body


@dataclass(frozen=True)
class Interval(Expression):
    lo: Expression
    hi: Expression

    def children(self):
        yield self.lo
        yield self.hi


@dataclass(frozen=True)
class BinaryOp(Expression):
    op: str
    left: Expression
    right: Expression

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")

    def children(self):
        yield self.left
        yield self.right


@dataclass(frozen=True)
class UnaryOp(Expression):
    op: str
    operand: Expression

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary operator {self.op!r}")

    def children(self):
        yield self.operand


@dataclass(frozen=True)
class FunctionApp(Expression):
    fn: Expression
    arg: Expression

    def children(self):
        yield self.fn
        yield self.arg


@dataclass(frozen=True)
class FunctionSpace(Expression):
    """The set of all relations/functions of a class, e.g. ``A <-> B``.

    Used where such a set appears nested inside an expression; at the top of a
    membership it becomes a :class:`FunctionClass` predicate instead.
    """

    kind: str
    domain: Expression
    codomain: Expression

    def __post_init__(self):
        if self.kind not in FUNCTION_CLASSES:
            raise ValueError(f"unknown function class {self.kind!r}")

    def children(self):
        yield self.domain
        yield self.codomain


@dataclass(frozen=True)
class BuiltinSet(Expression):
    which: str  # INT, NAT or BOOL

    def __post_init__(self):
        if self.which not in ("INT", "NAT", "BOOL"):
            raise ValueError(f"unknown builtin set {self.which!r}")


@dataclass(frozen=True)
class EmptySet(Expression):
    pass


# ----------------------------------------------------------------- predicates


class Predicate(Node):
    __slots__ = ()


@dataclass(frozen=True)
class Equal(Predicate):
    left: Expression
    right: Expression

    def children(self):
        yield self.left
        yield self.right


@dataclass(frozen=True)
class NotEqual(Predicate):
    left: Expression
    right: Expression

    def children(self):
        yield self.left
        yield self.right


@dataclass(frozen=True)
class Compare(Predicate):
    op: str
    left: Expression
    right: Expression

    def __post_init__(self):
        if self.op not in COMPARISONS:
            raise ValueError(f"unknown comparison {self.op!r}")

    def children(self):
        yield self.left
        yield self.right


@dataclass(frozen=True)
class Member(Predicate):
    elem: Expression
    set: Expression

    def children(self):
        yield self.elem
        yield self.set


@dataclass(frozen=True)
class NotMember(Predicate):
    elem: Expression
    set: Expression

    def children(self):
        yield self.elem
        yield self.set


@dataclass(frozen=True)
class Subset(Predicate):
    left: Expression
    right: Expression

    def children(self):
        yield self.left
        yield self.right


@dataclass(frozen=True)
class FunctionClass(Predicate):
    fn: Expression
    domain: Expression
    codomain: Expression
    kind: str

    def __post_init__(self):
        if self.kind not in FUNCTION_CLASSES:
            raise ValueError(f"unknown function class {self.kind!r}")

    def children(self):
        yield self.fn
        yield self.domain
        yield self.codomain


@dataclass(frozen=True)
class And(Predicate):
    left: Predicate
    right: Predicate

    def children(self):
        yield self.left
        yield self.right


@dataclass(frozen=True)
class Or(Predicate):
    left: Predicate
    right: Predicate

    def children(self):
        yield self.left
        yield self.right


@dataclass(frozen=True)
class Implies(Predicate):
    left: Predicate
    right: Predicate

    def children(self):
        yield self.left
        yield self.right


@dataclass(frozen=True)
class Not(Predicate):
    operand: Predicate

    def children(self):
        yield self.operand


@dataclass(frozen=True)
class ForAll(Predicate):
    bound_vars: tuple[str, ...]
    body: Predicate

    def __post_init__(self):
        if len(set(self.bound_vars)) != len(self.bound_vars):
            raise ValueError(f"duplicate bound variables {self.bound_vars}")

    def children(self):
        yield self.body


@dataclass(frozen=True)
class Exists(Predicate):
    bound_vars: tuple[str, ...]
    body: Predicate

    def __post_init__(self):
        if len(set(self.bound_vars)) != len(self.bound_vars):
            raise ValueError(f"duplicate bound variables {self.bound_vars}")

    def children(self):
        yield self.body


@dataclass(frozen=True)
class Truth(Predicate):
    pass


@dataclass(frozen=True)
class Falsity(Predicate):
    pass


Term = Union[Expression, Predicate]

BINDERS = (Comprehension, ForAll, Exists)


def conjuncts(p: Predicate) -> list[Predicate]:
    """Flatten nested conjunctions, left to right."""
    if isinstance(p, And):
        return conjuncts(p.left) + conjuncts(p.right)
    if isinstance(p, Truth):
        return []
    return [p]


def conjoin(preds) -> Predicate:
    preds = list(preds)
    if not preds:
        return Truth()
    out = preds[0]
    for p in preds[1:]:
        out = And(out, p)
    return out


# ------------------------------------------------------------ type expressions


class TypeExpr:
    __slots__ = ()


@dataclass(frozen=True)
class IntType(TypeExpr):
    pass


@dataclass(frozen=True)
class BoolType(TypeExpr):
    pass


@dataclass(frozen=True)
class CarrierRef(TypeExpr):
    name: str


@dataclass(frozen=True)
class Power(TypeExpr):
    element: TypeExpr


@dataclass(frozen=True)
class Product(TypeExpr):
    left: TypeExpr
    right: TypeExpr


def type_to_expr(t: TypeExpr) -> Expression:
    """The set expression denoting a type (its maximal set)."""
    if isinstance(t, IntType):
        return BuiltinSet("INT")
    if isinstance(t, BoolType):
        return BuiltinSet("BOOL")
    if isinstance(t, CarrierRef):
        return Identifier(t.name)
    if isinstance(t, Power):
        return UnaryOp(POW, type_to_expr(t.element))
    if isinstance(t, Product):
        return BinaryOp(CPROD, type_to_expr(t.left), type_to_expr(t.right))
    raise TypeError(f"not a type expression: {t!r}")


def expr_to_type(e: Expression, carriers) -> TypeExpr | None:
    """Read ``e`` as a type expression over ``carriers``; None if it is not one.

    ``NAT`` is deliberately rejected: it is not maximal in its type.
    """
    if isinstance(e, BuiltinSet):
        if e.which == "INT":
            return IntType()
        if e.which == "BOOL":
            return BoolType()
        return None
    if isinstance(e, Identifier):
        return CarrierRef(e.name) if e.name in carriers else None
    if isinstance(e, UnaryOp) and e.op == POW:
        inner = expr_to_type(e.operand, carriers)
        return Power(inner) if inner is not None else None
    if isinstance(e, BinaryOp) and e.op == CPROD:
        left = expr_to_type(e.left, carriers)
        right = expr_to_type(e.right, carriers)
        if left is None or right is None:
            return None
        return Product(left, right)
    return None


# ---------------------------------------------------------------- model units


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self):
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError("span start after end")

    def __str__(self):
        return f"{self.file}:{self.start_line}:{self.start_col}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: SourceSpan | None = None
    severity: str = "error"

    def __post_init__(self):
        if not self.message:
            raise ValueError("diagnostic message must be non-empty")
        if self.severity not in ("error", "warning"):
            raise ValueError(f"bad severity {self.severity!r}")

    def __str__(self):
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.severity}[{self.code}]: {self.message}"


class DiagnosticError(Exception):
    """Carries one or more diagnostics describing why input was rejected."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class ContextDef:
    name: str
    extends: tuple[str, ...] = ()
    carrier_sets: tuple[str, ...] = ()
    constants: tuple[str, ...] = ()
    axioms: tuple[tuple[str, Predicate], ...] = ()
    theorems: tuple[tuple[str, Predicate], ...] = ()
    spans: dict = field(default_factory=dict, compare=False, hash=False, repr=False)


@dataclass(frozen=True)
class Assignment:
    """``variable := value`` or, when ``index`` is set, ``variable(index) := value``."""

    variable: str
    value: Expression
    index: Expression | None = None

    def desugar(self) -> Assignment:
        """Indexed form becomes ``variable := variable <+ {index |-> value}``."""
        if self.index is None:
            return self
        update = SetExtension((Maplet(self.index, self.value),))
        return Assignment(self.variable, BinaryOp(OVERRIDE, Identifier(self.variable), update))


@dataclass(frozen=True)
class EventDef:
    name: str
    parameters: tuple[str, ...] = ()
    guards: tuple[tuple[str, Predicate], ...] = ()
    actions: tuple[Assignment, ...] = ()


INITIALISATION = "INITIALISATION"


@dataclass(frozen=True)
class MachineDef:
    name: str
    sees: tuple[str, ...] = ()
    variables: tuple[str, ...] = ()
    invariants: tuple[tuple[str, Predicate], ...] = ()
    events: tuple[EventDef, ...] = ()
    initialisation: EventDef | None = None
    spans: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def event(self, name: str) -> EventDef:
        if name == INITIALISATION and self.initialisation is not None:
            return self.initialisation
        for evt in self.events:
            if evt.name == name:
                return evt
        raise KeyError(name)


# ----------------------------------------------------------------- traversals


def map_children(node, fn):
    """Rebuild ``node`` with ``fn`` applied to every direct child term."""
    changes = {}
    for f in fields(node):
        value = getattr(node, f.name)
        if isinstance(value, Node):
            new = fn(value)
            if new is not value:
                changes[f.name] = new
        elif isinstance(value, tuple) and value and isinstance(value[0], Node):
            new = tuple(fn(v) for v in value)
            if any(a is not b for a, b in zip(new, value)):
                changes[f.name] = new
    return replace(node, **changes) if changes else node


def free_identifiers(term: Term) -> frozenset[str]:
    """Identifiers occurring in ``term`` outside the scope of any binder."""
    out: set[str] = set()
    _collect_free(term, frozenset(), out)
    return frozenset(out)


def _collect_free(node, bound: frozenset, out: set) -> None:
    if isinstance(node, Identifier):
        if node.name not in bound:
            out.add(node.name)
        return
    if isinstance(node, BINDERS):
        bound = bound | set(node.bound_vars)
    for child in node.children():
        _collect_free(child, bound, out)


def all_identifiers(term: Term) -> frozenset[str]:
    """Every identifier name in ``term``, bound or free, including binder names."""
    out: set[str] = set()
    stack = [term]
    while stack:
        node = stack.pop()
        if isinstance(node, Identifier):
            out.add(node.name)
        elif isinstance(node, BINDERS):
            out.update(node.bound_vars)
        stack.extend(node.children())
    return frozenset(out)


def context_closure(names, library: dict) -> list[ContextDef]:
    """Contexts reachable through ``extends`` from ``names``, ancestors first.

    Raises KeyError for an unknown name and ValueError on a cycle.
    """
    order: list[ContextDef] = []
    state: dict[str, str] = {}

    def visit(name: str, path: tuple):
        if state.get(name) == "done":
            return
        if state.get(name) == "active":
            raise ValueError("cyclic extends: " + " -> ".join(path + (name,)))
        if name not in library:
            raise KeyError(name)
        state[name] = "active"
        for parent in library[name].extends:
            visit(parent, path + (name,))
        state[name] = "done"
        order.append(library[name])

    for n in names:
        visit(n, ())
    return order


def _diag(code, message, unit, key=None):
    span = unit.spans.get(key) if key is not None else unit.spans.get(unit.name)
    return Diagnostic(code, message, span)


def well_formed(unit: ContextDef | MachineDef, library: dict) -> list[Diagnostic]:
    """Static checks on a context or machine; an empty list means well formed.

    ``library`` maps context names to :class:`ContextDef` and must contain
    everything ``unit`` extends or sees.
    """
    diags: list[Diagnostic] = []
    parents = unit.extends if isinstance(unit, ContextDef) else unit.sees
    try:
        if isinstance(unit, ContextDef):
            lib = dict(library)
            lib[unit.name] = unit
            ancestry = context_closure([unit.name], lib)[:-1]
        else:
            ancestry = context_closure(parents, library)
    except KeyError as exc:
        return [_diag("unknown-context", f"unknown context {exc.args[0]!r}", unit)]
    except ValueError as exc:
        return [_diag("cycle", str(exc), unit)]

    scope: set[str] = set()
    labels: set[str] = set()
    for ctx in ancestry:
        scope.update(ctx.carrier_sets, ctx.constants)
        labels.update(lbl for lbl, _ in ctx.axioms + ctx.theorems)

    def declare(names, kind):
        for name in names:
            if name in scope:
                diags.append(_diag("duplicate-identifier", f"{kind} {name!r} already declared", unit, name))
            scope.add(name)

    def check_label(label):
        if label in labels:
            diags.append(_diag("duplicate-label", f"label {label!r} is not unique", unit, label))
        labels.add(label)

    def check_scope(term, where, names):
        for name in sorted(free_identifiers(term) - names):
            diags.append(_diag("unresolved-identifier", f"{where}: unresolved identifier {name!r}", unit, where))

    if isinstance(unit, ContextDef):
        declare(unit.carrier_sets, "carrier set")
        declare(unit.constants, "constant")
        for label, pred in unit.axioms + unit.theorems:
            check_label(label)
            check_scope(pred, label, scope)
        return diags

    declare(unit.variables, "variable")
    for label, pred in unit.invariants:
        check_label(label)
        check_scope(pred, label, scope)

    init = unit.initialisation
    if init is None:
        diags.append(_diag("missing-initialisation", "machine has no INITIALISATION event", unit))
    else:
        if init.parameters or init.guards:
            diags.append(_diag("bad-initialisation", "INITIALISATION must have no parameters or guards", unit, init.name))
        missing = [v for v in unit.variables if v not in {a.variable for a in init.actions}]
        for v in missing:
            diags.append(_diag("missing-initialisation", f"INITIALISATION does not assign {v!r}", unit, init.name))

    for evt in ([init] if init else []) + list(unit.events):
        local = scope | set(evt.parameters)
        seen: set[str] = set()
        for label, pred in evt.guards:
            check_scope(pred, f"{evt.name}/{label}", local)
        for act in evt.actions:
            if act.variable not in unit.variables:
                diags.append(_diag("unresolved-identifier", f"{evt.name}: assignment to undeclared variable {act.variable!r}", unit, evt.name))
            if act.variable in seen:
                diags.append(_diag("double-assignment", f"{evt.name}: {act.variable!r} assigned twice", unit, evt.name))
            seen.add(act.variable)
            check_scope(act.value, f"{evt.name}", local)
            if act.index is not None:
                check_scope(act.index, f"{evt.name}", local)
    return diags
