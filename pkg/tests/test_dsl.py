"""Text and JSON formats: parsing, canonical serialization, errors."""

import dataclasses
import json

import pytest

from limsketch import dsl
from limsketch.engine import ChaseConfig, rules_of, saturate
from limsketch.localizer import SketchMorphism, break_cycles
from limsketch.sketch import ValidationReport, Violation, builtin_sketches

from test_engine import mp_basic

MP = builtin_sketches()["mp_theory"]
SP, LOC = break_cycles(MP)
SP_NAMED = dataclasses.replace(SP, name="mp_sp")
SIGMA = SketchMorphism(SP_NAMED, MP, LOC.underlying.object_map,
                       LOC.underlying.arrow_map)
ENV = {"mp_sp": SP_NAMED, "mp_theory": MP}

PAIR_SPEC = """spec pair over graph {
  elem v0 : V
  elem v1 : V
  elem e0 : E
  act s(e0) = v0
  act t(e0) = v1
}
"""


def test_builtin_sketches_round_trip():
    """parse after serialize is the canonicalised sketch, byte-stably."""
    for name, sk in builtin_sketches().items():
        text = dsl.serialize(sk)
        back = dsl.parse(text)
        assert len(back) == 1
        assert back[0] == dsl.canonical(sk), name
        assert dsl.serialize(back[0]) == text, name


def test_canonical_is_idempotent():
    for sk in builtin_sketches().values():
        assert dsl.canonical(dsl.canonical(sk)) == dsl.canonical(sk)


def test_empty_sketch_form():
    empty = dsl.parse("sketch X { }")[0]
    assert dsl.serialize(empty) == "sketch X {\n}\n"


def test_broken_sketch_and_localiser_round_trip():
    text = dsl.serialize(SP_NAMED)
    assert dsl.parse(text)[0] == dsl.canonical(SP_NAMED)
    m = dsl.NamedMorphism("mp_sigma", SIGMA)
    assert dsl.parse(dsl.serialize(m), env=ENV)[0] == m


def test_spec_round_trip_keeps_element_order():
    decl = dsl.parse(PAIR_SPEC)[0]
    assert isinstance(decl, dsl.NamedSpec)
    assert decl.realization.carrier["V"].elements == ("v0", "v1")
    assert decl.realization.action["s"]("e0") == "v0"
    text = dsl.serialize(decl)
    assert dsl.parse(text)[0] == decl
    assert dsl.serialize(dsl.parse(text)[0]) == text


def test_spec_resolves_sketch_from_same_text():
    text = """sketch loop {
  object N
  arrow next : N -> N
}
spec two over loop {
  elem a : N
  elem b : N
  act next(a) = b
  act next(b) = a
}
"""
    decls = dsl.parse(text)
    assert len(decls) == 2
    assert decls[1].realization.over is decls[0]


def test_config_round_trip():
    text = "config quick {\n  max_rounds = 3\n  rules = c_IM, c_MP\n}\n"
    decl = dsl.parse(text)[0]
    assert decl == dsl.NamedConfig(
        "quick", ChaseConfig(max_rounds=3, rule_subset=("c_IM", "c_MP")))
    assert dsl.serialize(decl) == text
    bare = dsl.parse("config slow { max_rounds = 99 }")[0]
    assert bare.config.rule_subset is None
    assert "rules" not in dsl.serialize(bare)


def test_comments_and_whitespace_are_ignored():
    noisy = """// a graph
sketch   graph2 {   object V // nodes
  object E
  arrow s : E -> V arrow t : E -> V }
"""
    sk = dsl.parse(noisy)[0]
    assert sk.objects == ("V", "E")
    assert set(sk.arrows) == {"s", "t"}


def test_mono_by_suffix_and_by_keyword():
    suffix = dsl.parse(
        "sketch a { object X arrow i : X -> X [mono] }")[0]
    keyword = dsl.parse(
        "sketch a { object X arrow i : X -> X mono i }")[0]
    assert suffix.monos == keyword.monos == frozenset({"i"})
    assert "[mono]" in dsl.serialize(suffix)


def test_identity_equations():
    sk = dsl.parse(
        "sketch r { object A arrow e : A -> A eq e.e = id(A) }")[0]
    assert sk.equations[0].lhs == ("e", "e")
    assert sk.equations[0].rhs == ()
    assert "eq e.e = id(A)" in dsl.serialize(sk)
    # an identity on the left is normalised to the right
    flipped = dsl.parse(
        "sketch r { object A arrow e : A -> A eq id(A) = e.e }")[0]
    assert flipped.equations == sk.equations


def test_parse_errors_carry_line_and_column():
    try:
        dsl.parse("sketch a {\n  object\n}\n")
        assert False, "expected ParseError"
    except dsl.ParseError as e:
        assert [(i.line, i.col) for i in e.issues] == [(3, 1)]
        assert "object name" in e.issues[0].message


def test_independent_errors_all_reported_in_one_pass():
    bad = """sketch one {
  object A
  arrow f : A -> B
  arrow f : A -> A
}
sketch two {
  object C
  eq g = id(C)
}
spec s over nowhere {
  elem x : Q
}
"""
    with pytest.raises(dsl.ParseError) as exc:
        dsl.parse(bad)
    messages = [i.message for i in exc.value.issues]
    assert any("duplicate arrow 'f'" in m for m in messages)
    assert any("undeclared object 'B'" in m for m in messages)
    assert any("undeclared arrow 'g'" in m for m in messages)
    assert any("unknown sketch 'nowhere'" in m for m in messages)
    lines = [i.line for i in exc.value.issues]
    assert min(lines) >= 3 and max(lines) >= 10


def test_recovery_continues_after_broken_cone():
    bad = """sketch k {
  object A
  cone c : A {
    base
      n :
    ;
    proj
  }
  arrow f : A -> A
  eq f = oops
}
"""
    with pytest.raises(dsl.ParseError) as exc:
        dsl.parse(bad)
    messages = [i.message for i in exc.value.issues]
    # both the cone error and the later dangling arrow are seen
    assert any("object name" in m for m in messages)
    assert any("undeclared arrow 'oops'" in m for m in messages)


def test_dangling_references_rejected():
    cases = [
        ("sketch a { object A cone c : B { base ; proj } }", "apex 'B'"),
        ("sketch a { object A arrow f : A -> A cone c : A {"
         " base x : A ; proj y -> f } }", "undeclared node 'y'"),
        ("spec s over graph { elem e : W }", "undeclared object 'W'"),
        ("spec s over graph { elem e : E act s(e) = e }",
         "not an element of V"),
        ("morphism m : graph -> graph { obj V => Q }",
         "unknown target object 'Q'"),
        ("morphism m : graph -> graph { arr s => zip }",
         "unknown target arrow 'zip'"),
    ]
    for text, needle in cases:
        with pytest.raises(dsl.ParseError) as exc:
            dsl.parse(text)
        assert any(needle in i.message for i in exc.value.issues), (
            text, str(exc.value))


def test_duplicate_declaration_names():
    with pytest.raises(dsl.ParseError) as exc:
        dsl.parse("sketch a { }\nsketch a { }")
    assert "duplicate declaration name 'a'" in str(exc.value)


def test_spec_missing_action_is_an_error():
    with pytest.raises(dsl.ParseError) as exc:
        dsl.parse("spec s over graph { elem e : E elem v : V "
                  "act s(e) = v }")
    assert "missing the action t(e)" in str(exc.value)


def test_cone_projection_equations_are_synthesised():
    text = """sketch trig {
  object A
  object B
  object X
  arrow f : A -> B
  arrow pa : X -> A
  arrow pb : X -> B
  cone c : X {
    base
      na : A
      nb : B
      edge na -> nb : f
    ;
    proj
      na -> pa
      nb -> pb
  }
}
"""
    sk = dsl.parse(text)[0]
    assert len(sk.equations) == 1
    assert (sk.equations[0].lhs, sk.equations[0].rhs) == (("pa", "f"),
                                                          ("pb",))
    for explicit in ("  eq pa.f = pb\n}\n", "  eq pb = pa.f\n}\n"):
        again = dsl.parse(text[:-2] + explicit)[0]
        assert len(again.equations) == 1
    assert dsl.parse(dsl.serialize(sk))[0] == dsl.canonical(sk)


def test_json_round_trip_for_all_declaration_kinds():
    for sk in builtin_sketches().values():
        assert dsl.parse_json(dsl.serialize_json(sk))[0] == dsl.canonical(sk)
    spec = dsl.parse(PAIR_SPEC)[0]
    assert dsl.parse_json(dsl.serialize_json(spec))[0] == spec
    m = dsl.NamedMorphism("mp_sigma", SIGMA)
    assert dsl.parse_json(dsl.serialize_json(m), env=ENV)[0] == m
    cfg = dsl.NamedConfig("c", ChaseConfig(max_rounds=5,
                                           rule_subset=("c_MP",)))
    assert dsl.parse_json(dsl.serialize_json(cfg))[0] == cfg


def test_json_and_text_forms_agree():
    """A sketch shipped as JSON parses to the same thing as its text."""
    for sk in builtin_sketches().values():
        from_text = dsl.parse(dsl.serialize(sk))[0]
        from_json = dsl.parse_json(dsl.serialize_json(sk))[0]
        assert from_text == from_json


def test_json_list_resolves_earlier_sketches():
    docs = json.loads("[" + dsl.serialize_json(SP_NAMED) + "]")
    spec_doc = json.loads(dsl.serialize_json(
        dsl.NamedSpec("base", mp_basic())))
    spec_doc["over"] = "mp_sp"
    docs.append(spec_doc)
    decls = dsl.parse_json(docs)
    assert decls[1].realization.over is decls[0]


def test_report_serialization():
    assert dsl.serialize_json(ValidationReport(())) == "[]"
    rep = ValidationReport((
        Violation("code-a", "spot", "text", "error"),
        Violation("code-b", "spot2", "text2", "warning"),
    ))
    doc = json.loads(dsl.serialize_json(rep))
    assert doc == [
        {"severity": "error", "code": "code-a", "where": "spot",
         "message": "text"},
        {"severity": "warning", "code": "code-b", "where": "spot2",
         "message": "text2"},
    ]


def test_chase_result_serialization():
    rules = [r for r in rules_of(LOC) if r.id == "c_MP"]
    res = saturate(mp_basic(), rules)
    doc = json.loads(dsl.serialize_json(res))
    assert doc["status"] == "fixpoint"
    assert doc["rounds"] == 1
    assert [r["round"] for r in doc["trace"]] == [0, 1]
    assert doc["trace"][1]["fired"] == [{"rule": "c_MP", "match": "m0"}]


def test_serialize_rejects_unknown_values():
    with pytest.raises(TypeError):
        dsl.serialize(42)
    with pytest.raises(TypeError):
        dsl.serialize_json(object())


def test_parse_path_by_extension(tmp_path):
    sk_file = tmp_path / "g.sk"
    sk_file.write_text(dsl.serialize(builtin_sketches()["graph"]))
    json_file = tmp_path / "g.sk.json"
    json_file.write_text(dsl.serialize_json(builtin_sketches()["graph"]))
    a = dsl.parse_path(sk_file)[0]
    b = dsl.parse_path(json_file)[0]
    assert a == b == dsl.canonical(builtin_sketches()["graph"])


def test_malformed_json_reports_position():
    with pytest.raises(dsl.ParseError):
        dsl.parse_json("{not json")
    with pytest.raises(dsl.ParseError) as exc:
        dsl.parse_json({"kind": "sketch", "name": "x"})
    assert "malformed" in str(exc.value)


def test_serialize_file_joins_with_blank_lines():
    text = dsl.serialize_file([SP_NAMED, dsl.NamedMorphism("m", SIGMA)])
    assert dsl.parse(text, env={"mp_theory": MP})[0] == dsl.canonical(
        SP_NAMED)
    assert "\n\nmorphism" in text
