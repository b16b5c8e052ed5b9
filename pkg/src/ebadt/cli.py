"""Command-line front end.

Commands::

    ebadt check-context FILE [--with FILE ...]
    ebadt instantiate ABSTRACT CONCRETE [BINDING]
    ebadt check-machine MACHINE [--with FILE ...] [--binding FILE] [--enumerable]
    ebadt explore MACHINE [--with FILE ...] [--binding FILE] [--depth N]
    ebadt fmt FILE ...

Contexts named by ``extends``/``sees`` are looked up among the ``--with``
files first, then as ``<name>.ebm`` next to the input files. Exit status is
0 when everything holds within the bounds, 1 on a counterexample or
invariant violation and 2 on parse, validation or configuration errors.
"""

from __future__ import annotations

import argparse
import fnmatch
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import model as m
from . import obligations as ob
from .explorer import explore, format_trace, state_limit_from_env
from .instantiation import (
    instantiation_obligations,
    machine_instantiate,
    validate_binding,
)
from .interp import UniverseConfig
from .model import Diagnostic, DiagnosticError
from .parser import parse_binding, parse_unit, pretty_print

DEFAULT_CARRIER_SIZE = 2

EXIT_OK, EXIT_FOUND, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ loading


@dataclass
class Workspace:
    """Parsed units plus the directories searched for missing contexts."""

    search_dirs: list = field(default_factory=list)
    contexts: dict = field(default_factory=dict)  # name -> ContextDef
    explicit: set = field(default_factory=set)  # names given on the command line

    def add_dir(self, path: Path):
        d = path.resolve().parent
        if d not in self.search_dirs:
            self.search_dirs.append(d)

    def load(self, path) -> object:
        path = Path(path)
        self.add_dir(path)
        return read_unit(path)

    def add_context(self, ctx: m.ContextDef, explicit=True):
        if explicit and ctx.name in self.explicit and self.contexts[ctx.name] != ctx:
            raise DiagnosticError([Diagnostic("duplicate-context", f"two different contexts named {ctx.name!r}")])
        self.contexts[ctx.name] = ctx
        if explicit:
            self.explicit.add(ctx.name)

    def resolve(self, names) -> dict:
        """Load every context reachable from ``names``; return the library."""
        todo = list(names)
        while todo:
            name = todo.pop()
            if name not in self.contexts:
                path = next((d / f"{name}.ebm" for d in self.search_dirs if (d / f"{name}.ebm").exists()), None)
                if path is None:
                    raise DiagnosticError([Diagnostic("unknown-context", f"cannot find context {name!r}")])
                unit = read_unit(path)
                if not isinstance(unit, m.ContextDef) or unit.name != name:
                    raise DiagnosticError([Diagnostic("unknown-context", f"{path} does not define context {name!r}")])
                self.add_context(unit, explicit=False)
            todo.extend(self.contexts[name].extends)
        return dict(self.contexts)

    def bindings(self):
        for d in self.search_dirs:
            for path in sorted(d.glob("*.ebb")):
                yield path, read_binding(path)


def read_unit(path: Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DiagnosticError([Diagnostic("io-error", f"{path}: {exc.strerror or exc}")]) from None
    return parse_unit(text, str(path))


def read_binding(path: Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DiagnosticError([Diagnostic("io-error", f"{path}: {exc.strerror or exc}")]) from None
    return parse_binding(text, str(path))


def _check_well_formed(unit, library):
    diags = m.well_formed(unit, library)
    if diags:
        raise DiagnosticError(diags)


# ------------------------------------------------------------ configuration


_SET_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)=(.+)$")
_INT_RE = re.compile(r"^(-?\d+)\.\.(-?\d+)$")


def parse_set_option(text: str):
    """``NAME=k`` or ``NAME={a,b,c}`` -> (name, size, names or None)."""
    match = _SET_RE.match(text.replace(" ", ""))
    if not match:
        raise UsageError(f"bad --set {text!r}: expected NAME=k or NAME={{a,b}}")
    name, value = match.groups()
    if value.startswith("{") and value.endswith("}"):
        atoms = tuple(a for a in value[1:-1].split(",") if a)
        if not atoms or len(set(atoms)) != len(atoms):
            raise UsageError(f"bad --set {text!r}: atom names must be distinct and non-empty")
        return name, len(atoms), atoms
    if not value.isdigit() or int(value) < 1:
        raise UsageError(f"bad --set {text!r}: size must be a positive integer")
    return name, int(value), None


def parse_int_option(text: str):
    match = _INT_RE.match(text.replace(" ", ""))
    if not match:
        raise UsageError(f"bad --int {text!r}: expected lo..hi")
    lo, hi = int(match.group(1)), int(match.group(2))
    if lo > hi:
        raise UsageError(f"bad --int {text!r}: lo > hi")
    return lo, hi


def universe_from_args(args) -> UniverseConfig:
    lo, hi = parse_int_option(args.int)
    sizes, names = {}, {}
    for item in args.set or ():
        name, size, atoms = parse_set_option(item)
        sizes[name] = size
        if atoms:
            names[name] = atoms
    return UniverseConfig(lo, hi).with_carriers(sizes, names)


def _describe_bounds(cfg: UniverseConfig) -> dict:
    return {
        "int": [cfg.int_min, cfg.int_max],
        "carriers": {k: list(cfg.atom_names[k]) if k in cfg.atom_names else v
                     for k, v in sorted(cfg.carrier_sizes.items())},
    }


# ------------------------------------------------------------------ reports


def _exit_for(results) -> int:
    verdict = ob.worst_verdict(results)
    return {0: EXIT_OK, 1: EXIT_FOUND}.get(ob.SEVERITY[verdict], EXIT_ERROR)


def _summary(results) -> dict:
    out: dict = {}
    for r in results:
        out[r.verdict] = out.get(r.verdict, 0) + 1
    return dict(sorted(out.items()))


def emit_results(args, title: str, cfg, results, extra=None) -> int:
    code = _exit_for(results)
    if args.format == "json":
        doc = {"command": args.command, "title": title, "bounds": _describe_bounds(cfg),
               "results": [r.to_json() for r in results], "summary": _summary(results), "exit": code}
        if extra:
            doc.update(extra)
        print(json.dumps(doc, indent=2, sort_keys=True))
        return code
    print(title)
    b = _describe_bounds(cfg)
    carriers = ", ".join(f"{k}={v}" for k, v in b["carriers"].items())
    print(f"bounds: INT {cfg.int_min}..{cfg.int_max}" + (f"; {carriers}" if carriers else ""))
    width = max((len(r.po_label) for r in results), default=0)
    for r in results:
        print(f"  {r.po_label:<{width}}  {r.verdict}")
        if r.message:
            print(f"      {r.message}")
        rec = r.to_json()
        for name, value in (rec.get("witness") or {}).items():
            print(f"      {name} = {value}")
    counts = ", ".join(f"{n} {v}" for v, n in _summary(results).items())
    print(f"{len(results)} obligations: {counts or 'none'}")
    return code


# ----------------------------------------------------------------- commands


def cmd_check_context(args) -> int:
    ws = Workspace()
    for path in args.with_ or ():
        unit = ws.load(path)
        if isinstance(unit, m.ContextDef):
            ws.add_context(unit)
    unit = ws.load(args.path)
    if not isinstance(unit, m.ContextDef):
        raise UsageError(f"{args.path} is not a context")
    ws.add_context(unit)
    lib = ws.resolve([unit.name])
    _check_well_formed(unit, lib)
    ctxs = m.context_closure([unit.name], lib)
    cfg = ob.resolve_universe(ctxs, universe_from_args(args), DEFAULT_CARRIER_SIZE)
    results = ob.check_context(ctxs, cfg, enumerable=args.enumerable)
    return emit_results(args, f"context {unit.name}", cfg, results)


def _select(pos, patterns):
    if not patterns:
        return pos
    return [po for po in pos if any(fnmatch.fnmatchcase(po.label, p) for p in patterns)]


def _find_binding(ws: Workspace, abstract: str, concrete: str, explicit=None):
    if explicit:
        return read_binding(Path(explicit))
    found = [b for _, b in ws.bindings() if b.abstract_context == abstract and b.concrete_context == concrete]
    if not found:
        raise DiagnosticError([Diagnostic("missing-binding-file",
                                          f"no binding file instantiates {abstract} with {concrete}")])
    return found[0]


def cmd_instantiate(args) -> int:
    ws = Workspace()
    for path in args.with_ or ():
        unit = ws.load(path)
        if isinstance(unit, m.ContextDef):
            ws.add_context(unit)
    abstract, concrete = ws.load(args.abstract), ws.load(args.concrete)
    for unit, path in ((abstract, args.abstract), (concrete, args.concrete)):
        if not isinstance(unit, m.ContextDef):
            raise UsageError(f"{path} is not a context")
        ws.add_context(unit)
    lib = ws.resolve([abstract.name, concrete.name])
    _check_well_formed(abstract, lib)
    _check_well_formed(concrete, lib)
    binding = _find_binding(ws, abstract.name, concrete.name, args.binding)
    vb = validate_binding(abstract, concrete, binding, lib)
    pos = _select(instantiation_obligations(abstract, concrete, vb, lib), args.only)
    ctxs = m.context_closure([concrete.name], lib)
    cfg = ob.resolve_universe(ctxs, universe_from_args(args), DEFAULT_CARRIER_SIZE)
    source = ob.InterpretationSource(tuple(ctxs), cfg, args.enumerable)
    if not args.enumerable:
        source = list(source)  # evaluate the definitions once
    results = ob.check_all(pos, source, args.jobs)
    return emit_results(args, f"instantiate {abstract.name} with {concrete.name}", cfg, results)


def prepare_machine(args):
    """Load a machine and its contexts, instantiating when a ``--with``
    context is the concrete side of a binding for a seen abstract context.

    Returns (machine, contexts in closure order).
    """
    ws = Workspace()
    extra = []
    for path in args.with_ or ():
        unit = ws.load(path)
        if isinstance(unit, m.ContextDef):
            ws.add_context(unit)
            extra.append(unit)
    mch = ws.load(args.machine)
    if not isinstance(mch, m.MachineDef):
        raise UsageError(f"{args.machine} is not a machine")
    lib = ws.resolve(mch.sees)
    _check_well_formed(mch, lib)
    closure = {c.name for c in m.context_closure(mch.sees, lib)}
    for ctx in extra:
        if ctx.name in closure:
            continue  # overrides a seen context directly
        if args.binding:
            binding = read_binding(Path(args.binding))
        else:
            matches = [b for _, b in ws.bindings()
                       if b.concrete_context == ctx.name and b.abstract_context in closure]
            if not matches:
                raise DiagnosticError([Diagnostic(
                    "missing-binding-file", f"no binding file instantiates a context seen by {mch.name} with {ctx.name}")])
            binding = matches[0]
        lib = ws.resolve([binding.abstract_context, ctx.name])
        vb = validate_binding(lib[binding.abstract_context], ctx, binding, lib)
        mch, lib = machine_instantiate(mch, vb, lib)
        closure = {c.name for c in m.context_closure(mch.sees, lib)}
    return mch, m.context_closure(mch.sees, lib)


def cmd_check_machine(args) -> int:
    mch, ctxs = prepare_machine(args)
    cfg = ob.resolve_universe(ctxs, universe_from_args(args), DEFAULT_CARRIER_SIZE)
    pos = _select(ob.machine_obligations(mch, ctxs), args.only)
    source = ob.InterpretationSource(tuple(ctxs), cfg, args.enumerable)
    if not args.enumerable:
        source = list(source)
    results = ob.check_all(pos, source, args.jobs)
    return emit_results(args, f"machine {mch.name} (sees {', '.join(mch.sees)})", cfg, results)


def cmd_explore(args) -> int:
    mch, ctxs = prepare_machine(args)
    cfg = ob.resolve_universe(ctxs, universe_from_args(args), DEFAULT_CARRIER_SIZE)
    interp = next(iter(ob.concrete_interpretations(ctxs, cfg)))
    limit = state_limit_from_env()
    report = explore(mch, interp, args.depth, limit)
    code = EXIT_FOUND if report.violations else EXIT_OK
    names = cfg.atom_names
    if args.format == "json":
        doc = {
            "command": "explore", "machine": mch.name, "bounds": _describe_bounds(cfg), "depth": args.depth,
            "states_visited": report.states_visited, "depth_reached": report.depth_reached,
            "transitions": report.transitions, "out_of_bounds": report.out_of_bounds,
            "frontier_exhausted": report.frontier_exhausted, "state_limit": limit, "exit": code,
            "violations": [{"invariant": v.invariant, "message": v.message,
                            "trace": [s.show(names) for s in v.trace],
                            "state": format_trace((), v.state, names)[len("state: "):]}
                           for v in report.violations],
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
        return code
    print(f"explore {mch.name} to depth {args.depth}")
    print(f"states visited: {report.states_visited}; depth reached: {report.depth_reached}; "
          f"transitions: {report.transitions}; out of bounds: {report.out_of_bounds}")
    if not report.frontier_exhausted:
        print(f"state limit {limit} reached: exploration incomplete")
    print(f"violations: {len(report.violations)}")
    for v in report.violations:
        print(f"-- {v.invariant} violated" + (f" ({v.message})" if v.message else ""))
        for line in format_trace(v.trace, v.state, names).splitlines():
            print(f"   {line}")
    return code


def cmd_fmt(args) -> int:
    for path in args.paths:
        p = Path(path)
        unit = read_binding(p) if p.suffix == ".ebb" else read_unit(p)
        sys.stdout.write(pretty_print(unit))
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ebadt", description="Check generic instantiation of Event-B style "
                                     "abstract data types by bounded evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def bounds(p):
        p.add_argument("--set", action="append", metavar="NAME=k|NAME={a,b}",
                       help="carrier set size or atom names (repeatable)")
        p.add_argument("--int", default="-3..5", metavar="LO..HI", help="integer range (default -3..5)")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--with", dest="with_", action="append", metavar="FILE", help="extra context file")

    p = sub.add_parser("check-context", help="evaluate a context's axioms and theorems")
    p.add_argument("path")
    p.add_argument("--enumerable", action="store_true", help="search models instead of evaluating definitions")
    bounds(p)
    p.set_defaults(func=cmd_check_context)

    p = sub.add_parser("instantiate", help="validate a binding and check its soundness obligations")
    p.add_argument("abstract")
    p.add_argument("concrete")
    p.add_argument("binding", nargs="?", help="binding file (default: search next to the inputs)")
    p.add_argument("--enumerable", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--only", action="append", metavar="PATTERN",
                   help="check only obligations whose label matches this glob (repeatable)")
    bounds(p)
    p.set_defaults(func=cmd_instantiate)

    p = sub.add_parser("check-machine", help="check INIT and INV obligations of a machine")
    p.add_argument("machine")
    p.add_argument("--binding")
    p.add_argument("--enumerable", action="store_true", help="check against every model of the contexts")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--only", action="append", metavar="PATTERN",
                   help="check only obligations whose label matches this glob (repeatable)")
    bounds(p)
    p.set_defaults(func=cmd_check_machine)

    p = sub.add_parser("explore", help="breadth-first exploration with invariant checking")
    p.add_argument("machine")
    p.add_argument("--binding")
    p.add_argument("--depth", type=int, default=6)
    bounds(p)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("fmt", help="pretty-print model files")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_fmt)
    return parser


def _join_int_values(argv):
    """``--int -1..2`` would read as an option; glue it to its flag."""
    out = []
    it = iter(argv)
    for arg in it:
        if arg == "--int":
            out.append("--int=" + next(it, ""))
        else:
            out.append(arg)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_int_values(argv))
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    if getattr(args, "depth", 0) < 0:
        parser.error("--depth must be non-negative")
    try:
        return args.func(args)
    except DiagnosticError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_ERROR
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except BrokenPipeError:
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
