import pytest

from conftest import base_library, instantiated_train_machine, load
from ebadt import model as m
from ebadt.instantiation import (
    BindingError, instantiation_obligations, machine_instantiate, substitute, validate_binding,
)
from ebadt.interp import UniverseConfig, enumerate_type
from ebadt.parser import parse_binding, parse_context, parse_predicate, show_pred

STACK_HEADER = "instantiate stack_abstract with stack_concrete\n"
STACK_CONSTS = "const STACK := STACK\nconst empty_stack := empty_stack\nconst push := push\nconst pop := pop\n"


def stack_binding(sets="set STACK_TYPE := POW(INT ** ELEMENT) ** INT\nset ELEMENT := ELEMENT\n",
                  consts=STACK_CONSTS):
    lib = base_library()
    b = parse_binding(STACK_HEADER + sets + consts)
    return validate_binding(lib["stack_abstract"], lib["stack_concrete"], b, lib)


def binding_codes(**kw):
    with pytest.raises(BindingError) as info:
        stack_binding(**kw)
    return [d.code for d in info.value.diagnostics]


def test_corpus_stack_binding_accepted():
    vb = stack_binding()
    assert dict(vb.set_bindings)["STACK_TYPE"] == m.Product(
        m.Power(m.Product(m.IntType(), m.CarrierRef("ELEMENT"))), m.IntType())
    assert dict(vb.constant_bindings)["pop"] == m.Identifier("pop")


def test_carrier_bound_to_constant_rejected():
    codes = binding_codes(sets="set STACK_TYPE := STACK\nset ELEMENT := ELEMENT\n")
    assert codes == ["not-a-type-expression"]


def test_carrier_bound_to_proper_subset_rejected():
    codes = binding_codes(sets="set STACK_TYPE := {1} ** INT\nset ELEMENT := ELEMENT\n")
    assert codes == ["not-a-type-expression"]


def test_missing_binding_rejected():
    codes = binding_codes(consts=STACK_CONSTS.replace("const pop := pop\n", ""))
    assert codes == ["missing-binding"]


def test_unknown_identifier_in_binding():
    codes = binding_codes(consts=STACK_CONSTS.replace("const pop := pop", "const pop := popp"))
    assert codes == ["unknown-identifier"]


def test_binding_kind_mismatch():
    codes = binding_codes(sets="set STACK_TYPE := POW(INT ** ELEMENT) ** INT\n",
                          consts=STACK_CONSTS + "const ELEMENT := ELEMENT\n")
    assert sorted(codes) == ["missing-binding", "wrong-binding-kind"]


def test_identity_like_substitution_leaves_axiom_unchanged():
    vb = stack_binding()
    axm0_2 = dict(load("stack_abstract").axioms)["axm0_2"]
    assert substitute(axm0_2, vb) == axm0_2


def test_carrier_replaced_by_type_expression():
    vb = stack_binding()
    p = parse_predicate("!s . s : STACK_TYPE => s = s")
    assert show_pred(substitute(p, vb)) == "!s . s : POW(INT ** ELEMENT) ** INT => s = s"


def test_capture_avoiding_substitution():
    p = parse_predicate("!f . f : S => f = c")
    out = substitute(p, {"c": m.Identifier("f")})
    assert out == parse_predicate("!f0 . f0 : S => f0 = f")


def test_stack_obligations():
    lib = base_library()
    vb = stack_binding()
    pos = instantiation_obligations(lib["stack_abstract"], lib["stack_concrete"], vb, lib)
    assert [po.label for po in pos] == [f"INST/axm0_{i}" for i in range(1, 8)]
    assert [lbl for lbl, _ in pos[0].hypotheses] == ["axm1_1", "axm1_2", "axm1_3", "axm1_4"]


def test_train_obligations_one_per_abstract_axiom():
    lib = base_library()
    vb = validate_binding(lib["train_abstract"], lib["train_concrete"], load("train.ebb"), lib)
    pos = instantiation_obligations(lib["train_abstract"], lib["train_concrete"], vb, lib)
    assert [po.label for po in pos] == [f"INST/{lbl}" for lbl, _ in lib["train_abstract"].axioms]
    assert len(pos) == 15


def test_zero_axioms_zero_obligations():
    a = parse_context("context A sets S end")
    c = parse_context("context C sets T end")
    vb = validate_binding(a, c, parse_binding("instantiate A with C set S := T"))
    assert instantiation_obligations(a, c, vb) == []


@pytest.mark.parametrize("pair", [("stack_abstract", "stack_concrete", "stack.ebb"),
                                  ("train_abstract", "train_concrete", "train.ebb")])
def test_no_abstract_identifier_left_free(pair):
    lib = base_library()
    abstract, concrete, bfile = lib[pair[0]], lib[pair[1]], load(pair[2])
    vb = validate_binding(abstract, concrete, bfile, lib)
    abstract_only = (set(abstract.carrier_sets) | set(abstract.constants)) - (
        set(concrete.carrier_sets) | set(concrete.constants))
    assert abstract_only  # the carrier type set at least
    for po in instantiation_obligations(abstract, concrete, vb, lib):
        assert not (m.free_identifiers(po.goal) & abstract_only), po.label
        # idempotence: substituting a second time changes nothing
        assert substitute(po.goal, vb) == po.goal


@pytest.mark.parametrize("sizes", [{"ELEMENT": 1}, {"ELEMENT": 2}, {"SECTION": 1}, {"SECTION": 3}])
def test_bound_types_are_nonempty_and_maximal(sizes):
    cfg = UniverseConfig(-1, 1, {"ELEMENT": 1, "SECTION": 1, **sizes})
    lib = base_library()
    for a, c, f in [("stack_abstract", "stack_concrete", "stack.ebb"),
                    ("train_abstract", "train_concrete", "train.ebb")]:
        vb = validate_binding(lib[a], lib[c], load(f), lib)
        for name, t in vb.set_bindings:
            values = enumerate_type(t, cfg)
            assert len(values) > 0, name
            # maximal: every value of the type is there, by an independent count
            assert len(values) == _type_size(t, cfg)


def _type_size(t, cfg):
    if isinstance(t, m.IntType):
        return cfg.int_max - cfg.int_min + 1
    if isinstance(t, m.CarrierRef):
        return cfg.carrier_sizes[t.name]
    if isinstance(t, m.Product):
        return _type_size(t.left, cfg) * _type_size(t.right, cfg)
    if isinstance(t, m.Power):
        return 2 ** _type_size(t.element, cfg)
    raise TypeError(t)


def test_machine_instantiation_redirects_sees_and_topology():
    mi, ctxs = instantiated_train_machine()
    assert mi.sees == ("topology_linear3",)
    names = [c.name for c in ctxs]
    assert names == ["train_concrete", "topology_linear3"]
    topo = ctxs[-1]
    assert topo.extends == ("train_concrete",)
    typing = dict(mi.invariants)["typing"]
    assert "trains" in m.free_identifiers(typing)
    assert "TRAIN_TYPE" not in m.free_identifiers(typing)


def test_machine_variable_shadows_abstract_name():
    lib = base_library()
    vb = validate_binding(lib["stack_abstract"], lib["stack_concrete"], load("stack.ebb"), lib)
    mch = m.MachineDef("M", ("stack_abstract",), ("pop",), (("i", parse_predicate("pop : STACK")),),
                       (), m.EventDef("INITIALISATION", (), (), (m.Assignment("pop", m.Identifier("empty_stack")),)))
    mi, _ = machine_instantiate(mch, vb, lib)
    assert mi.sees == ("stack_concrete",)
    assert dict(mi.invariants)["i"] == parse_predicate("pop : STACK")
