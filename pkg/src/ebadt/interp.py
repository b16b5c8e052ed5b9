"""Evaluation of expressions and predicates over bounded finite universes.

Integers range over ``int_min..int_max`` and every carrier set is a fixed
collection of atoms, so every quantifier and comprehension is evaluated by
exhaustive enumeration. Bound variables are enumerated from membership-like
conjuncts of the quantifier's constraint (``x : S``, ``x |-> y : S``,
``f : A --> B``, ``s <: S``, ``x = E``).

Arithmetic may step outside the integer bounds (``n + 1`` at ``int_max``).
Such values are legal, but whenever a membership test or a function
application fails *only* because a value lies outside the bounded universe,
the outcome is undetermined: :class:`OutOfScope` is raised and the nearest
enclosing quantifier instance, comprehension element or element-wise check
skips that case.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Mapping

from . import model as m
from .values import EMPTY, Atom, FinSet, Pair, in_int_bounds


class EvaluationError(Exception):
    """Evaluation could not produce a value."""


class ApplicationError(EvaluationError):
    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class UnsupportedQuantifier(EvaluationError):
    def __init__(self, var):
        super().__init__(f"cannot determine a finite range for bound variable {var!r}")
        self.var = var


class UniverseTooLarge(EvaluationError):
    pass


class OutOfScope(EvaluationError):
    """A test involving a value outside the integer bounds is undetermined."""

    def __init__(self, value):
        super().__init__(f"value outside the bounded universe: {value!r}")
        self.value = value


@dataclass(frozen=True)
class UniverseConfig:
    int_min: int = -3
    int_max: int = 5
    carrier_sizes: Mapping[str, int] = field(default_factory=dict)
    # Optional display names for atoms, per carrier, in index order.
    atom_names: Mapping[str, tuple] = field(default_factory=dict)
    max_power: int = 20
    max_enumeration: int = 1 << 22

    def __post_init__(self):
        if self.int_min > self.int_max:
            raise ValueError(f"int_min {self.int_min} > int_max {self.int_max}")
        for name, size in self.carrier_sizes.items():
            if size < 1:
                raise ValueError(f"carrier set {name} must be non-empty")
        for name, names in self.atom_names.items():
            if len(names) != self.carrier_sizes.get(name, len(names)):
                raise ValueError(f"carrier set {name}: atom names do not match its size")

    def __hash__(self):
        return hash((self.int_min, self.int_max, tuple(sorted(self.carrier_sizes.items()))))

    def with_carriers(self, sizes=None, names=None) -> UniverseConfig:
        new_sizes = dict(self.carrier_sizes)
        new_sizes.update(sizes or {})
        new_names = dict(self.atom_names)
        for carrier, atoms in (names or {}).items():
            new_names[carrier] = tuple(atoms)
            new_sizes[carrier] = len(atoms)
        return UniverseConfig(self.int_min, self.int_max, new_sizes, new_names,
                              self.max_power, self.max_enumeration)

    def carrier(self, name: str) -> FinSet:
        if name not in self.carrier_sizes:
            raise EvaluationError(f"no size configured for carrier set {name!r}")
        return FinSet(Atom(name, i) for i in range(1, self.carrier_sizes[name] + 1))

    @cached_property
    def ints(self) -> FinSet:
        return FinSet(range(self.int_min, self.int_max + 1))

    @cached_property
    def nats(self) -> FinSet:
        return FinSet(range(0, self.int_max + 1))

    def in_scope(self, v) -> bool:
        return in_int_bounds(v, self.int_min, self.int_max)


@dataclass(frozen=True)
class Environment:
    """An immutable identifier-to-value map tied to a universe."""

    values: Mapping[str, object]
    cfg: UniverseConfig

    def __getitem__(self, name):
        return self.values[name]

    def __contains__(self, name):
        return name in self.values

    def bind(self, mapping) -> Environment:
        merged = dict(self.values)
        merged.update(mapping)
        return Environment(merged, self.cfg)


# --------------------------------------------------------------- enumeration


def _check_count(count, cfg, what):
    if count > cfg.max_enumeration:
        raise UniverseTooLarge(f"{what}: {count} candidates exceed the limit of {cfg.max_enumeration}")


def iter_subsets(s: FinSet, cfg: UniverseConfig) -> Iterator[FinSet]:
    if len(s) > cfg.max_power:
        raise UniverseTooLarge(f"powerset of a {len(s)}-element set exceeds the limit of {cfg.max_power}")
    items = s.ordered
    for k in range(len(items) + 1):
        for combo in itertools.combinations(items, k):
            yield FinSet(combo)


def function_space_size(kind: str, dom: FinSet, cod: FinSet) -> int:
    d, c = len(dom), len(cod)
    if kind == m.RELATION:
        return 2 ** (d * c)
    if kind == m.TOTAL:
        return c ** d
    if kind == m.PARTIAL:
        return (c + 1) ** d
    return math.perm(c, d) if d <= c else 0


def iter_functions(kind: str, dom: FinSet, cod: FinSet, cfg: UniverseConfig) -> Iterator[FinSet]:
    """All relations/functions of ``kind`` from ``dom`` to ``cod``, lazily.

    Only relation spaces are capped (through the powerset limit); callers
    that materialize a space check :func:`function_space_size` first.
    """
    d, c = dom.ordered, cod.ordered
    if kind == m.RELATION:
        yield from iter_subsets(FinSet(Pair(x, y) for x in d for y in c), cfg)
        return
    if kind == m.TOTAL:
        for images in itertools.product(c, repeat=len(d)):
            yield FinSet(map(Pair, d, images))
        return
    if kind == m.PARTIAL:
        choices = (None,) + c
        for images in itertools.product(choices, repeat=len(d)):
            yield FinSet(Pair(x, y) for x, y in zip(d, images) if y is not None)
        return
    if kind == m.TOTAL_INJ:
        for images in itertools.permutations(c, len(d)):
            yield FinSet(map(Pair, d, images))
        return
    raise ValueError(kind)


def enumerate_type(t: m.TypeExpr, cfg: UniverseConfig) -> FinSet:
    """The maximal set of type ``t`` within the bounded universe."""
    if isinstance(t, m.IntType):
        return cfg.ints
    if isinstance(t, m.BoolType):
        return FinSet((False, True))
    if isinstance(t, m.CarrierRef):
        return cfg.carrier(t.name)
    if isinstance(t, m.Power):
        return FinSet(iter_subsets(enumerate_type(t.element, cfg), cfg))
    if isinstance(t, m.Product):
        left, right = enumerate_type(t.left, cfg), enumerate_type(t.right, cfg)
        _check_count(len(left) * len(right), cfg, "cartesian product")
        return FinSet(Pair(a, b) for a in left.ordered for b in right.ordered)
    raise TypeError(t)


# --------------------------------------------------------- bound-variable plans


def _pattern_vars(e) -> list[str] | None:
    """Identifiers of a maplet tree of identifiers, or None for other shapes."""
    if isinstance(e, m.Identifier):
        return [e.name]
    if isinstance(e, m.Maplet):
        left, right = _pattern_vars(e.left), _pattern_vars(e.right)
        if left is None or right is None:
            return None
        return left + right
    return None


@dataclass(frozen=True)
class Binder:
    """How one conjunct enumerates some of the unbound variables."""

    atom: m.Predicate
    kind: str  # member, function, domain, subset, equal
    binds: tuple[str, ...]
    source: m.Expression  # the set (or, for ``equal``, the value) enumerated
    implied: m.Predicate | None = None  # a conjunct true by construction


def _binder_for(atom, unbound: set) -> Binder | None:
    fv = m.free_identifiers
    if isinstance(atom, m.Member):
        names = _pattern_vars(atom.elem)
        if names and unbound & set(names) and not (fv(atom.set) & unbound):
            return Binder(atom, "member", tuple(dict.fromkeys(n for n in names if n in unbound)), atom.set)
    elif isinstance(atom, m.FunctionClass):
        if isinstance(atom.fn, m.Identifier) and atom.fn.name in unbound:
            if not ((fv(atom.domain) | fv(atom.codomain)) & unbound):
                space = m.FunctionSpace(atom.kind, atom.domain, atom.codomain)
                return Binder(atom, "function", (atom.fn.name,), space)
    elif isinstance(atom, m.Subset):
        if isinstance(atom.left, m.Identifier) and atom.left.name in unbound:
            if not (fv(atom.right) & unbound):
                return Binder(atom, "subset", (atom.left.name,), atom.right)
    elif isinstance(atom, m.Equal):
        for var, other in ((atom.left, atom.right), (atom.right, atom.left)):
            if isinstance(var, m.Identifier) and var.name in unbound and not (fv(other) & unbound):
                return Binder(atom, "equal", (var.name,), other)
    return None


def infer_bound_type(var: str, constraint: m.Predicate, others=()) -> Binder:
    """Find the conjunct of ``constraint`` that gives ``var`` a finite range.

    ``others`` are further variables bound by the same quantifier; a binder
    may not depend on them. Raises :class:`UnsupportedQuantifier`.
    """
    unbound = {var, *others}
    for atom in m.conjuncts(constraint):
        b = _binder_for(atom, unbound)
        if b is not None and var in b.binds:
            return b
    raise UnsupportedQuantifier(var)


@dataclass
class Plan:
    prechecks: list
    steps: list  # (Binder, [conjuncts checked after binding])


def _domain_binders(conjuncts, unbound: set) -> list:
    """Binders for ``f : A +-> B`` paired with ``dom(f) = E``: enumerate the
    total functions from ``E`` instead of all partial functions."""
    fv = m.free_identifiers
    domains = {}
    for c in conjuncts:
        if isinstance(c, m.Equal):
            for lhs, rhs in ((c.left, c.right), (c.right, c.left)):
                if (isinstance(lhs, m.UnaryOp) and lhs.op == m.DOM
                        and isinstance(lhs.operand, m.Identifier) and not (fv(rhs) & unbound)):
                    domains.setdefault(lhs.operand.name, (rhs, c))
    out = []
    for i, c in enumerate(conjuncts):
        if (isinstance(c, m.FunctionClass) and c.kind == m.PARTIAL
                and isinstance(c.fn, m.Identifier) and c.fn.name in unbound
                and c.fn.name in domains and not (fv(c.codomain) & unbound)):
            rhs, eq = domains[c.fn.name]
            space = m.FunctionSpace(m.TOTAL, rhs, c.codomain)
            out.append((i, Binder(c, "domain", (c.fn.name,), space, eq)))
    return out


# Rough sizes for ranking binders; only their relative order matters.
_GUESS_SET = 3
_GUESS_INT = 9


def _estimate(e) -> float:
    """Guess the cardinality of set expression ``e``."""
    if isinstance(e, m.BuiltinSet):
        return 2 if e.which == "BOOL" else _GUESS_INT
    if isinstance(e, m.UnaryOp) and e.op == m.POW:
        return 2.0 ** min(_estimate(e.operand), 64)
    if isinstance(e, m.BinaryOp) and e.op == m.CPROD:
        return _estimate(e.left) * _estimate(e.right)
    if isinstance(e, m.SetExtension):
        return len(e.members)
    if isinstance(e, m.Interval):
        return _GUESS_SET
    if isinstance(e, m.Comprehension):
        return float(_GUESS_SET) ** len(e.bound_vars)
    if isinstance(e, m.FunctionSpace):
        d, c = _estimate(e.domain), _estimate(e.codomain)
        if e.kind == m.RELATION:
            return 2.0 ** min(d * c, 64)
        return (c + (e.kind == m.PARTIAL)) ** min(d, 64)
    return _GUESS_SET


def _cost(b: Binder) -> float:
    if b.kind == "equal":
        return 1
    if b.kind == "subset":
        return 2.0 ** min(_estimate(b.source), 64)
    return _estimate(b.source)


def make_plan(variables, conjuncts) -> Plan:
    """Order the binders so that each conjunct is tested as early as possible.

    Deterministic bindings (``x = E``) come first; otherwise the binder
    after which the most pending conjuncts become checkable wins, then the
    one whose variables occur in the most pending conjuncts, then the one
    with the smaller guessed range, then the earlier conjunct.
    """
    unbound = set(variables)
    free = [m.free_identifiers(c) for c in conjuncts]
    pending = [i for i in range(len(conjuncts)) if free[i] & unbound]
    prechecks = [conjuncts[i] for i in range(len(conjuncts)) if not (free[i] & unbound)]
    steps = []
    while unbound:
        live = [conjuncts[i] if i in pending else m.Truth() for i in range(len(conjuncts))]
        special = _domain_binders(live, unbound)
        shadowed = {i for i, _ in special}
        candidates = [(i, _binder_for(conjuncts[i], unbound)) for i in pending if i not in shadowed]
        candidates = [(i, b) for i, b in candidates if b is not None] + special
        best = None
        for i, b in candidates:
            after = unbound - set(b.binds)
            gained = sum(1 for j in pending
                         if j != i and conjuncts[j] is not b.implied and not (free[j] & after))
            degree = sum(1 for j in pending if j != i and free[j] & set(b.binds))
            score = (b.kind == "equal", gained, degree, -_cost(b), -i)
            if best is None or score > best[0]:
                best = (score, i, b)
        if best is None:
            raise UnsupportedQuantifier(next(v for v in variables if v in unbound))
        _, chosen, binder = best
        unbound -= set(binder.binds)
        ready = [j for j in pending if j != chosen and not (free[j] & unbound)]
        pending = [j for j in pending if j != chosen and j not in ready]
        steps.append((binder, [conjuncts[j] for j in ready]))
    return Plan(prechecks, steps)


# ----------------------------------------------------------------- evaluator


class Evaluator:
    """Evaluates terms against a mutable working environment (a dict).

    Public helpers :func:`eval_expr` and :func:`eval_pred` wrap this class
    for callers that hold an :class:`Environment`.
    """

    def __init__(self, cfg: UniverseConfig):
        self.cfg = cfg
        self._plans: dict = {}
        self.skipped = 0  # instances skipped as out of scope

    # -- plans

    def plan_for(self, node, variables, conjuncts) -> Plan:
        key = id(node)
        cached = self._plans.get(key)
        if cached is not None and cached[0] is node:
            return cached[1]
        plan = make_plan(variables, conjuncts)
        self._plans[key] = (node, plan)
        return plan

    # -- solutions of a conjunctive constraint

    def solutions(self, plan: Plan, env: dict, budget: int | None = None) -> Iterator[None]:
        """Bind the plan's variables in ``env`` to every solution in turn.

        ``env`` is mutated while iterating and restored afterwards; consumers
        must copy anything they want to keep. Conjuncts raising OutOfScope
        reject the candidate. ``budget`` caps the number of candidate
        bindings tried (UniverseTooLarge beyond it), for searches whose size
        cannot be bounded up front.
        """
        try:
            for c in plan.prechecks:
                if not self.pred(c, env):
                    return
        except OutOfScope:
            self.skipped += 1
            return
        touched = {v for binder, _ in plan.steps for v in binder.binds}
        saved = {v: env[v] for v in touched if v in env}
        try:
            yield from self._solve(plan.steps, 0, env, [budget])
        finally:
            for v in touched:
                if v in saved:
                    env[v] = saved[v]
                else:
                    env.pop(v, None)

    def _solve(self, steps, k, env, budget):
        if k == len(steps):
            yield None
            return
        binder, checks = steps[k]
        for _ in self._bind(binder, env):
            if budget[0] is not None:
                budget[0] -= 1
                if budget[0] < 0:
                    raise UniverseTooLarge("search exceeded the candidate limit")
            try:
                ok = all(self.pred(c, env) for c in checks)
            except OutOfScope:
                self.skipped += 1
                ok = False
            if ok:
                yield from self._solve(steps, k + 1, env, budget)

    def _bind(self, binder: Binder, env) -> Iterator[None]:
        kind = binder.kind
        if kind == "equal":
            env[binder.binds[0]] = self.expr(binder.source, env)
            yield None
            return
        if kind == "subset":
            for s in iter_subsets(self._as_set(self.expr(binder.source, env)), self.cfg):
                env[binder.binds[0]] = s
                yield None
            return
        if kind in ("function", "domain"):
            space = binder.source
            dom = self._as_set(self.expr(space.domain, env))
            cod = self._as_set(self.expr(space.codomain, env))
            for f in iter_functions(space.kind, dom, cod, self.cfg):
                env[binder.binds[0]] = f
                yield None
            return
        # member: destructure each element against the maplet pattern
        pattern = binder.atom.elem
        binds = set(binder.binds)
        for v in self._iter_set(binder.source, env):
            fresh: set = set()
            if self._match(pattern, v, env, binds, fresh):
                yield None

    def _match(self, pattern, v, env, binds, fresh) -> bool:
        if isinstance(pattern, m.Identifier):
            name = pattern.name
            if name in binds and name not in fresh:
                env[name] = v
                fresh.add(name)
                return True
            return env.get(name, _UNBOUND) == v
        if type(v) is not Pair:
            return False
        return (self._match(pattern.left, v.left, env, binds, fresh)
                and self._match(pattern.right, v.right, env, binds, fresh))

    def _iter_set(self, source, env) -> Iterator:
        if isinstance(source, m.UnaryOp) and source.op == m.POW:
            return iter_subsets(self._as_set(self.expr(source.operand, env)), self.cfg)
        if isinstance(source, m.FunctionSpace):
            dom = self._as_set(self.expr(source.domain, env))
            cod = self._as_set(self.expr(source.codomain, env))
            return iter_functions(source.kind, dom, cod, self.cfg)
        return iter(self._as_set(self.expr(source, env)))

    # -- expressions

    def _as_set(self, v) -> FinSet:
        if type(v) is not FinSet:
            raise EvaluationError(f"expected a set, got {v!r}")
        return v

    def _as_int(self, v) -> int:
        if type(v) is not int:
            raise EvaluationError(f"expected an integer, got {v!r}")
        return v

    def expr(self, e, env):
        t = type(e)
        if t is m.Identifier:
            try:
                return env[e.name]
            except KeyError:
                raise EvaluationError(f"unbound identifier {e.name!r}") from None
        if t is m.FunctionApp:
            return self._apply(e, env)
        if t is m.Maplet:
            return Pair(self.expr(e.left, env), self.expr(e.right, env))
        if t is m.IntegerLiteral:
            return e.value
        if t is m.BinaryOp:
            return self._binary(e, env)
        if t is m.SetExtension:
            return FinSet(self.expr(x, env) for x in e.members)
        if t is m.EmptySet:
            return EMPTY
        if t is m.Interval:
            lo, hi = self._as_int(self.expr(e.lo, env)), self._as_int(self.expr(e.hi, env))
            return FinSet(range(lo, hi + 1))
        if t is m.UnaryOp:
            if e.op == m.POW:
                return FinSet(iter_subsets(self._as_set(self.expr(e.operand, env)), self.cfg))
            rel = self._relation(self.expr(e.operand, env))
            return rel.domain() if e.op == m.DOM else rel.range()
        if t is m.Comprehension:
            return self._comprehension(e, env)
        if t is m.BuiltinSet:
            if e.which == "INT":
                return self.cfg.ints
            if e.which == "NAT":
                return self.cfg.nats
            return FinSet((False, True))
        if t is m.BoolLiteral:
            return e.value
        if t is m.FunctionSpace:
            dom = self._as_set(self.expr(e.domain, env))
            cod = self._as_set(self.expr(e.codomain, env))
            _check_count(function_space_size(e.kind, dom, cod), self.cfg, "function space")
            return FinSet(iter_functions(e.kind, dom, cod, self.cfg))
        raise EvaluationError(f"cannot evaluate {e!r}")

    def _relation(self, v) -> FinSet:
        if type(v) is not FinSet or not v.is_relation():
            raise EvaluationError(f"expected a relation, got {v!r}")
        return v

    def _apply(self, e, env):
        fn = self.expr(e.fn, env)
        arg = self.expr(e.arg, env)
        if type(fn) is not FinSet:
            raise ApplicationError(f"applying a non-function {fn!r}", fn)
        try:
            return fn.apply(arg)
        except TypeError:
            raise ApplicationError(f"applying a non-relation {fn!r}", fn) from None
        except KeyError:
            if not self.cfg.in_scope(arg):
                raise OutOfScope(arg) from None
            raise ApplicationError(f"{arg!r} is outside the domain of the applied function", arg) from None
        except ValueError:
            raise ApplicationError(f"function is not functional at {arg!r}", arg) from None

    def _binary(self, e, env):
        op = e.op
        left = self.expr(e.left, env)
        right = self.expr(e.right, env)
        if op == m.PLUS:
            return self._as_int(left) + self._as_int(right)
        if op == m.MINUS:
            return self._as_int(left) - self._as_int(right)
        if op == m.UNION:
            return FinSet(self._as_set(left) | self._as_set(right))
        if op == m.INTER:
            return FinSet(self._as_set(left) & self._as_set(right))
        if op == m.DIFF:
            return FinSet(self._as_set(left) - self._as_set(right))
        if op == m.CPROD:
            a, b = self._as_set(left), self._as_set(right)
            _check_count(len(a) * len(b), self.cfg, "cartesian product")
            return FinSet(Pair(x, y) for x in a for y in b)
        if op == m.OVERRIDE:
            f, g = self._relation(left), self._relation(right)
            gdom = g.graph.keys()
            return FinSet(itertools.chain((p for p in f if p.left not in gdom), g))
        if op == m.DOMSUB:
            s, f = self._as_set(left), self._relation(right)
            return FinSet(p for p in f if p.left not in s)
        if op == m.IMAGE:
            f, s = self._relation(left), self._as_set(right)
            return FinSet(p.right for p in f if p.left in s)
        raise EvaluationError(f"unknown operator {op}")

    def _comprehension(self, e, env):
        plan = self.plan_for(e, e.bound_vars, m.conjuncts(e.constraint))
        out = []
        for _ in self.solutions(plan, env):
            try:
                out.append(self.expr(e.body, env))
            except OutOfScope:
                self.skipped += 1
        return FinSet(out)

    # -- membership

    def tester(self, s, env) -> Callable[[object], bool]:
        """A membership test for set expression ``s``, built without
        enumerating type-like sets (INT, POW, products, function spaces)."""
        t = type(s)
        cfg = self.cfg
        if t is m.BuiltinSet:
            if s.which == "INT":
                lo, hi = cfg.int_min, cfg.int_max
                return lambda v: type(v) is int and lo <= v <= hi
            if s.which == "NAT":
                hi = cfg.int_max
                return lambda v: type(v) is int and 0 <= v <= hi
            return lambda v: type(v) is bool
        if t is m.UnaryOp and s.op == m.POW:
            inner = self.tester(s.operand, env)
            return lambda v: type(v) is FinSet and all(inner(x) for x in v)
        if t is m.BinaryOp and s.op == m.CPROD:
            left, right = self.tester(s.left, env), self.tester(s.right, env)
            return lambda v: type(v) is Pair and left(v.left) and right(v.right)
        if t is m.Interval:
            lo, hi = self._as_int(self.expr(s.lo, env)), self._as_int(self.expr(s.hi, env))
            return lambda v: type(v) is int and lo <= v <= hi
        if t is m.FunctionSpace:
            return self._space_tester(s, env)
        value = self.expr(s, env)
        if type(value) is not FinSet:
            raise EvaluationError(f"membership test against a non-set {value!r}")
        return value.__contains__

    def _space_tester(self, s, env):
        in_dom = self.tester(s.domain, env)
        in_cod = self.tester(s.codomain, env)
        dom = None
        if s.kind in (m.TOTAL, m.TOTAL_INJ):
            dom = self._as_set(self.expr(s.domain, env))

        def test(v):
            if type(v) is not FinSet:
                return False
            return self._function_class(v, s.kind, in_dom, in_cod, dom)

        return test

    def _function_class(self, f: FinSet, kind, in_dom, in_cod, dom) -> bool:
        """Check ``f`` against a function class; elements that fail only by
        lying outside the bounded universe are ignored."""
        cfg = self.cfg
        for p in f:
            if type(p) is not Pair:
                return False
            if not in_dom(p.left):
                if cfg.in_scope(p.left):
                    return False
                self.skipped += 1
                continue
            if not in_cod(p.right):
                if cfg.in_scope(p.right):
                    return False
                self.skipped += 1
        if kind == m.RELATION:
            return True
        if not f.is_function():
            return False
        if dom is not None:
            fdom = f.graph.keys()
            if any(x not in fdom for x in dom if cfg.in_scope(x)):
                return False
            if any(x not in dom for x in fdom if cfg.in_scope(x)):
                return False
        if kind == m.TOTAL_INJ:
            images = [p.right for p in f]
            if len(set(images)) != len(images):
                return False
        return True

    def member(self, elem, s, env) -> bool:
        v = self.expr(elem, env)
        if self.tester(s, env)(v):
            return True
        if not self.cfg.in_scope(v):
            raise OutOfScope(v)
        return False

    # -- predicates

    def pred(self, p, env) -> bool:
        t = type(p)
        if t is m.Member:
            return self.member(p.elem, p.set, env)
        if t is m.And:
            return self.pred(p.left, env) and self.pred(p.right, env)
        if t is m.Equal:
            return self.expr(p.left, env) == self.expr(p.right, env)
        if t is m.NotEqual:
            return self.expr(p.left, env) != self.expr(p.right, env)
        if t is m.NotMember:
            return not self.member(p.elem, p.set, env)
        if t is m.Implies:
            return (not self.pred(p.left, env)) or self.pred(p.right, env)
        if t is m.ForAll:
            return self._forall(p, env)
        if t is m.Subset:
            test = self.tester(p.right, env)
            for x in self._as_set(self.expr(p.left, env)):
                if not test(x):
                    if self.cfg.in_scope(x):
                        return False
                    self.skipped += 1
            return True
        if t is m.FunctionClass:
            f = self.expr(p.fn, env)
            if type(f) is not FinSet:
                return False
            in_dom = self.tester(p.domain, env)
            in_cod = self.tester(p.codomain, env)
            dom = self._as_set(self.expr(p.domain, env)) if p.kind in (m.TOTAL, m.TOTAL_INJ) else None
            return self._function_class(f, p.kind, in_dom, in_cod, dom)
        if t is m.Compare:
            a, b = self._as_int(self.expr(p.left, env)), self._as_int(self.expr(p.right, env))
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[p.op]
        if t is m.Or:
            return self.pred(p.left, env) or self.pred(p.right, env)
        if t is m.Not:
            return not self.pred(p.operand, env)
        if t is m.Exists:
            plan = self.plan_for(p, p.bound_vars, m.conjuncts(p.body))
            for _ in self.solutions(plan, env):
                return True
            return False
        if t is m.Truth:
            return True
        if t is m.Falsity:
            return False
        raise EvaluationError(f"cannot evaluate {p!r}")

    def _forall(self, p, env) -> bool:
        body = p.body
        if isinstance(body, m.Implies):
            hyps, goal = m.conjuncts(body.left), body.right
        else:
            hyps, goal = [], body
        plan = self.plan_for(p, p.bound_vars, hyps)
        for _ in self.solutions(plan, env):
            try:
                if not self.pred(goal, env):
                    return False
            except OutOfScope:
                self.skipped += 1
        return True


_UNBOUND = object()


def eval_expr(e: m.Expression, env: Environment):
    return Evaluator(env.cfg).expr(e, dict(env.values))


def eval_pred(p: m.Predicate, env: Environment) -> bool:
    return Evaluator(env.cfg).pred(p, dict(env.values))


def carrier_env(cfg: UniverseConfig, carriers) -> dict:
    return {name: cfg.carrier(name) for name in carriers}
