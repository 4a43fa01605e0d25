import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from shiftthermo.errors import InvalidInput
from shiftthermo.graph_model import CoreWithInwardRays, ExplicitFinite, Ladder
from shiftthermo.specs import graph_from_spec, number, potential_from_spec


@pytest.mark.parametrize("text,value", [
    ("log(2)", math.log(2)), ("-log(4)/2", -math.log(2)), ("2*pi", 2 * math.pi), (" 1e-3 ", 1e-3), (3, 3.0),
])
def test_number_expressions(text, value):
    assert number(text) == pytest.approx(value)


@pytest.mark.parametrize("text", ["__import__('os')", "x", "log(2, 3)", "1/0", "[1]", "exp(1000)", True, None])
def test_number_rejects(text):
    with pytest.raises(InvalidInput):
        number(text)


def test_graph_roundtrip(golden):
    assert graph_from_spec(golden.to_spec()).edges == golden.edges
    g = graph_from_spec({"kind": "core_with_inward_rays", "params": {"rays": 2}})
    assert isinstance(g, CoreWithInwardRays) and g.rays == 2
    assert isinstance(graph_from_spec({"kind": "ladder", "params": {}}), Ladder)


def test_table_potential_by_labels(golden):
    spec = {"depth": 1, "table": {"a": "log(2)", "b": 0, "c": -1}}
    phi = potential_from_spec(spec, golden)
    assert phi((0,)) == pytest.approx(math.log(2))
    assert phi.bounds == (-1.0, math.log(2))


def test_table_key_length_checked(golden):
    with pytest.raises(InvalidInput):
        potential_from_spec({"depth": 2, "table": {"a": 1}}, golden)


def test_family_rules(ladder, core_graph):
    phi = potential_from_spec({"family_rule": {"kind": "ladder_classes", "up": "log(2)", "down": "log(4)"}}, ladder)
    assert phi((1,)) == pytest.approx(math.log(4))
    psi = potential_from_spec({"family_rule": {"kind": "core_rays", "core": {"0": 1, "1": 2}, "rays": [3]}},
                              core_graph)
    assert psi((1,)) == 2.0


@pytest.mark.parametrize("doc", [
    {"depth": 1},
    {"family_rule": {"kind": "constant"}},
    {"family_rule": {"kind": "constant", "value": 1}, "depth": 1},
    {"family_rule": {"kind": "constant", "value": 1, "extra": 2}},
    {"depth": 0, "table": {"a": 1}},
    [],
])
def test_potential_schema_violations(doc, golden):
    with pytest.raises(InvalidInput):
        potential_from_spec(doc, golden)


def test_malformed_file(tmp_path):
    p = tmp_path / "g.json"
    p.write_text("{ not json")
    with pytest.raises(InvalidInput):
        graph_from_spec(str(p))


json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-5, 5) | st.floats(allow_nan=False) | st.text(max_size=6),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=6), inner, max_size=4),
    max_leaves=12,
)


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.sampled_from(["kind", "params", "edges", "x"]), json_values, max_size=3)
       | st.fixed_dictionaries({"kind": st.sampled_from(["explicit", "ladder", "core_with_inward_rays"]),
                                "params": json_values}))
def test_graph_fuzz_only_raises_invalid_input(doc):
    try:
        g = graph_from_spec(doc)
    except InvalidInput:
        return
    assert g.has_vertex(g.reference_vertex())


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.sampled_from(["depth", "table", "family_rule", "truncation_error"]), json_values,
                       max_size=3))
def test_potential_fuzz_only_raises_invalid_input(doc):
    g = ExplicitFinite([(0, 0, 0), (1, 0, 1), (2, 1, 0)])
    try:
        potential_from_spec(doc, g)
    except InvalidInput:
        pass


def test_fuzzed_text_never_crashes(tmp_path):
    p = tmp_path / "x.json"
    for text in ["", "[]", "null", '{"kind": 1}', '{"kind": "explicit", "params": {"edges": [[0, 0, 1]]}}']:
        p.write_text(text)
        with pytest.raises(InvalidInput):
            graph_from_spec(str(p))
    p.write_text(json.dumps({"kind": "zray"}))
    assert graph_from_spec(str(p)).kind == "zray"
