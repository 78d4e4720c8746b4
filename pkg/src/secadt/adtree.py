"""Attack-defense trees and their ADTool-style XML encoding.

The XML dialect is the one ADTool reads and writes, plus one extension: a
``refinement="sequential"`` attribute for ordered conjunction of attack nodes::

    <adtree>
      <node refinement="disjunctive">
        <label>Injection</label>
        <node refinement="disjunctive"><label>CAPEC-66</label></node>
        ...
        <node refinement="disjunctive" switchRole="yes"><label>Pattern</label></node>
      </node>
    </adtree>

A ``node`` carrying ``switchRole="yes"`` is the counter-child of its parent and
has the opposite kind.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from typing import Iterator

from secadt.errors import TreeStructureError, TreeSyntaxError

ATTACK = "attack"
DEFENSE = "defense"

DISJUNCTIVE = "disjunctive"
CONJUNCTIVE = "conjunctive"
SEQUENTIAL = "sequential"

REFINEMENTS = (DISJUNCTIVE, CONJUNCTIVE, SEQUENTIAL)


def opposite(kind: str) -> str:
    return DEFENSE if kind == ATTACK else ATTACK


@dataclass(frozen=True)
class Node:
    label: str
    kind: str = ATTACK
    refinement: str = DISJUNCTIVE
    children: tuple[Node, ...] = ()
    counter: Node | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self) -> Iterator[Node]:
        """Pre-order traversal, counter-child after the regular children."""
        yield self
        for child in self.children:
            yield from child.walk()
        if self.counter is not None:
            yield from self.counter.walk()

    def with_children(self, children) -> Node:
        return replace(self, children=tuple(children))


@dataclass(frozen=True)
class ADTree:
    root: Node

    def __post_init__(self):
        check_tree(self.root)

    def nodes(self) -> Iterator[Node]:
        return self.root.walk()

    def __len__(self):
        return sum(1 for _ in self.nodes())


def attack(label, *children, refinement=DISJUNCTIVE, counter=None) -> Node:
    """Shorthand used by tests and tree generation."""
    return Node(label, ATTACK, refinement, tuple(children), counter)


def defense(label, *children, refinement=DISJUNCTIVE, counter=None) -> Node:
    return Node(label, DEFENSE, refinement, tuple(children), counter)


def check_tree(root: Node) -> None:
    """Raise :class:`TreeStructureError` unless *root* satisfies the tree invariants."""
    if root.kind != ATTACK:
        raise TreeStructureError("the root of an attack-defense tree must be an attack node", root.label)
    _check_node(root, path=())


def _check_node(node: Node, path: tuple[str, ...]) -> None:
    where = "/".join(path + (node.label,))
    if not node.label or not node.label.strip():
        raise TreeStructureError(f"empty label under {'/'.join(path) or '<root>'}", node.label)
    if node.refinement not in REFINEMENTS:
        raise TreeStructureError(f"unknown refinement {node.refinement!r} at {where}", node.label)
    if node.refinement == SEQUENTIAL and node.kind != ATTACK:
        raise TreeStructureError(f"sequential refinement on defense node {where}", node.label)
    seen = set()
    for child in node.children:
        if child.kind != node.kind:
            raise TreeStructureError(f"child {child.label!r} of {where} has the wrong kind", child.label)
        if child.label in seen:
            raise TreeStructureError(f"duplicate sibling label {child.label!r} under {where}", child.label)
        seen.add(child.label)
        _check_node(child, path + (node.label,))
    if node.counter is not None:
        if node.counter.kind == node.kind:
            raise TreeStructureError(f"counter-child of {where} must have the opposite kind", node.label)
        _check_node(node.counter, path + (node.label,))


# XML


def parse_adtree(text: str | bytes) -> ADTree:
    try:
        element = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise TreeSyntaxError(f"malformed tree document: {exc.msg if hasattr(exc, 'msg') else exc}",
                              line, column) from None
    if element.tag == "adtree":
        nodes = [e for e in element if e.tag == "node"]
        if len(nodes) != 1:
            raise TreeStructureError(f"<adtree> must contain exactly one root <node>, found {len(nodes)}")
        element = nodes[0]
    elif element.tag != "node":
        raise TreeStructureError(f"unexpected document element <{element.tag}>")
    if element.get("switchRole") == "yes":
        raise TreeStructureError("the root node cannot switch role")
    return ADTree(_read_node(element, ATTACK, ()))


def _read_node(element, kind: str, path: tuple[str, ...]) -> Node:
    label_el = element.find("label")
    label = (label_el.text or "").strip() if label_el is not None else ""
    where = "/".join(path) or "<root>"
    if not label:
        raise TreeStructureError(f"node with empty label under {where}")
    refinement = element.get("refinement", DISJUNCTIVE)
    if refinement not in REFINEMENTS:
        raise TreeStructureError(f"unknown refinement {refinement!r} on node {label!r}", label)
    here = path + (label,)
    children = []
    counter = None
    for sub in element:
        if sub.tag != "node":
            continue
        if sub.get("switchRole") == "yes":
            if counter is not None:
                raise TreeStructureError(f"node {'/'.join(here)!r} has two counter-children", label)
            counter = _read_node(sub, opposite(kind), here)
        else:
            children.append(_read_node(sub, kind, here))
    if refinement == SEQUENTIAL and kind != ATTACK:
        raise TreeStructureError(f"sequential refinement on defense node {'/'.join(here)!r}", label)
    node = Node(label, kind, refinement, tuple(children), counter)
    return node


def serialize_adtree(tree: ADTree | Node) -> str:
    root = tree.root if isinstance(tree, ADTree) else tree
    doc = ET.Element("adtree")
    doc.append(_write_node(root, switched=False))
    ET.indent(doc, space="  ")
    body = ET.tostring(doc, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"


def _write_node(node: Node, switched: bool):
    el = ET.Element("node", {"refinement": node.refinement})
    if switched:
        el.set("switchRole", "yes")
    label = ET.SubElement(el, "label")
    label.text = node.label
    for child in node.children:
        el.append(_write_node(child, switched=False))
    if node.counter is not None:
        el.append(_write_node(node.counter, switched=True))
    return el


def read_adtree(path) -> ADTree:
    with open(path, "rb") as fh:
        return parse_adtree(fh.read())


def write_adtree(tree: ADTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_adtree(tree))
