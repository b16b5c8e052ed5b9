"""Finite set-theoretic values.

Integers and booleans are plain Python ``int``/``bool``; well-typed models
never mix the two inside one set, so Python's ``True == 1`` is harmless.
Carrier-set elements are :class:`Atom`, ordered pairs are :class:`Pair` and
finite sets (including relations and functions) are :class:`FinSet`.
"""

from __future__ import annotations

from typing import NamedTuple


class Atom(NamedTuple):
    carrier: str
    index: int  # 1-based

    def __repr__(self):
        return f"{self.carrier}{self.index}"


class Pair(NamedTuple):
    left: object
    right: object

    def __repr__(self):
        return f"({self.left!r} |-> {self.right!r})"


_MULTI = object()  # marks a point mapped to more than one image


class FinSet(frozenset):
    """An immutable finite set with a canonical iteration order.

    Relational lookups (``dom``, application) are cached on first use.
    """

    def __reduce__(self):
        return (FinSet, (list(frozenset.__iter__(self)),))

    @property
    def ordered(self) -> tuple:
        try:
            return self._ordered
        except AttributeError:
            self._ordered = tuple(sorted(frozenset.__iter__(self), key=sort_key))
            return self._ordered

    def __iter__(self):
        return iter(self.ordered)

    def __repr__(self):
        return "{" + ", ".join(repr(v) for v in self.ordered) + "}"

    def is_relation(self) -> bool:
        return all(type(v) is Pair for v in frozenset.__iter__(self))

    @property
    def graph(self) -> dict:
        """Map from each domain point to its unique image, or ``_MULTI``."""
        try:
            return self._graph
        except AttributeError:
            g: dict = {}
            for v in frozenset.__iter__(self):
                if type(v) is not Pair:
                    raise TypeError(f"not a relation: contains {v!r}")
                g[v.left] = _MULTI if v.left in g else v.right
            self._graph = g
            return g

    def is_function(self) -> bool:
        return all(v is not _MULTI for v in self.graph.values())

    def apply(self, x):
        """Image of ``x``; KeyError if outside the domain, ValueError if ambiguous."""
        y = self.graph[x]
        if y is _MULTI:
            raise ValueError(x)
        return y

    def domain(self) -> FinSet:
        return FinSet(self.graph.keys())

    def range(self) -> FinSet:
        return FinSet(v.right for v in frozenset.__iter__(self))


EMPTY = FinSet()


def sort_key(v):
    """Canonical total order across all value kinds."""
    t = type(v)
    if t is bool:
        return (1, v)
    if t is int:
        return (0, v)
    if t is Atom:
        return (2, v.carrier, v.index)
    if t is Pair:
        return (3, sort_key(v.left), sort_key(v.right))
    if t is FinSet:
        return (4, len(v), tuple(sort_key(x) for x in v.ordered))
    raise TypeError(f"not a value: {v!r}")


def in_int_bounds(v, lo: int, hi: int) -> bool:
    """True if every integer occurring inside ``v`` lies in ``lo..hi``."""
    t = type(v)
    if t is int:
        return lo <= v <= hi
    if t is Pair:
        return in_int_bounds(v.left, lo, hi) and in_int_bounds(v.right, lo, hi)
    if t is FinSet:
        return all(in_int_bounds(x, lo, hi) for x in frozenset.__iter__(v))
    return True


def show_value(v, atom_names=None) -> str:
    """Render ``v`` as a literal in the surface syntax."""
    t = type(v)
    if t is bool:
        return "TRUE" if v else "FALSE"
    if t is int:
        return str(v)
    if t is Atom:
        names = (atom_names or {}).get(v.carrier)
        return names[v.index - 1] if names else f"{v.carrier}{v.index}"
    if t is Pair:
        left = show_value(v.left, atom_names)
        right = show_value(v.right, atom_names)
        if type(v.right) is Pair:
            right = f"({right})"
        return f"{left} |-> {right}"
    if t is FinSet:
        return "{" + ", ".join(show_value(x, atom_names) for x in v.ordered) + "}"
    raise TypeError(f"not a value: {v!r}")
