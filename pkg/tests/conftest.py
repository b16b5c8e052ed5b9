from pathlib import Path

import pytest

from ebadt import model as m
from ebadt.instantiation import machine_instantiate, validate_binding
from ebadt.interp import UniverseConfig
from ebadt.obligations import concrete_interpretations, resolve_universe
from ebadt.parser import parse_binding, parse_unit

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

# Correct contexts by name; mutants share names with the files they mutate,
# so they are loaded explicitly where needed.
BASE_CONTEXTS = [
    "stack_abstract", "stack_concrete", "train_abstract", "train_concrete",
    "topology_linear3", "topology_y4",
]


def load(name):
    path = CORPUS / (name if "." in name else f"{name}.ebm")
    text = path.read_text()
    if path.suffix == ".ebb":
        return parse_binding(text, str(path))
    return parse_unit(text, str(path))


def base_library():
    return {ctx.name: ctx for ctx in map(load, BASE_CONTEXTS)}


def instantiated_train_machine(machine_file="train_machine", topology=None):
    """The train machine instantiated with the concrete train type."""
    lib = base_library()
    mch = load(machine_file)
    if topology is not None:
        mch = m.MachineDef(mch.name, (topology,), mch.variables, mch.invariants, mch.events, mch.initialisation)
    vb = validate_binding(lib["train_abstract"], lib["train_concrete"], load("train.ebb"), lib)
    mi, lib2 = machine_instantiate(mch, vb, lib)
    return mi, m.context_closure(mi.sees, lib2)


def train_interpretation(train_ids=2, int_min=-3, int_max=5, machine_file="train_machine", topology=None,
                         names=None):
    mi, ctxs = instantiated_train_machine(machine_file, topology)
    cfg = UniverseConfig(int_min, int_max).with_carriers({"TRAIN_ID": train_ids}, names)
    cfg = resolve_universe(ctxs, cfg)
    return mi, ctxs, next(iter(concrete_interpretations(ctxs, cfg)))


@pytest.fixture
def library():
    return base_library()


# Acceptance tests record one PASS/FAIL line each; they are repeated in the
# terminal summary so they show up even when output is captured.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
