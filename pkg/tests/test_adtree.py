import pytest

from secadt.adtree import (
    ADTree,
    ATTACK,
    DEFENSE,
    SEQUENTIAL,
    Node,
    attack,
    defense,
    parse_adtree,
    serialize_adtree,
)
from secadt.errors import TreeStructureError, TreeSyntaxError


def test_single_node_document():
    tree = parse_adtree("<node><label>CAPEC-66</label></node>")
    assert tree.root == Node("CAPEC-66")
    assert len(tree) == 1


def test_initial_tree_document(initial_tree):
    assert len(initial_tree) == 4
    assert [c.label for c in initial_tree.root.children] == ["CAPEC-66", "CAPEC-250", "CAPEC-244"]


def test_two_counter_children_rejected():
    doc = """<node><label>a</label>
      <node switchRole="yes"><label>d1</label></node>
      <node switchRole="yes"><label>d2</label></node>
    </node>"""
    with pytest.raises(TreeStructureError, match="two counter-children"):
        parse_adtree(doc)


def test_empty_label_rejected():
    with pytest.raises(TreeStructureError, match="empty label"):
        parse_adtree("<node><label>a</label><node><label> </label></node></node>")


def test_sequential_defense_rejected():
    doc = """<node><label>a</label>
      <node switchRole="yes" refinement="sequential"><label>d</label></node></node>"""
    with pytest.raises(TreeStructureError, match="sequential"):
        parse_adtree(doc)
    with pytest.raises(TreeStructureError):
        ADTree(attack("a", counter=defense("d", defense("x"), refinement=SEQUENTIAL)))


def test_syntax_error_has_position():
    with pytest.raises(TreeSyntaxError) as info:
        parse_adtree("<node>\n<label>a</label>\n</nod>")
    assert info.value.line == 3


def test_root_must_be_attack():
    with pytest.raises(TreeStructureError):
        ADTree(Node("d", DEFENSE))


def test_counter_must_switch_kind():
    with pytest.raises(TreeStructureError, match="opposite kind"):
        ADTree(attack("a", counter=attack("b")))


def test_duplicate_sibling_labels_rejected():
    with pytest.raises(TreeStructureError, match="duplicate"):
        ADTree(attack("a", attack("b"), attack("b")))


def test_one_node_serializes_to_one_node_element():
    text = serialize_adtree(ADTree(attack("A")))
    assert text.count("<node") == 1


def test_sequential_refinement_survives_round_trip():
    tree = ADTree(attack("root", attack("s1"), attack("s2"), refinement=SEQUENTIAL,
                         counter=defense("d", defense("p1"), defense("p2"))))
    text = serialize_adtree(tree)
    assert 'refinement="sequential"' in text
    back = parse_adtree(text)
    assert back == tree
    assert back.root.counter.kind == DEFENSE and back.root.kind == ATTACK


def test_walk_visits_counter_after_children():
    root = attack("a", attack("b"), counter=defense("d"))
    assert [n.label for n in root.walk()] == ["a", "b", "d"]
