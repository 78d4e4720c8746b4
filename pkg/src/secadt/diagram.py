"""Sequence diagrams of security patterns, their activity-diagram reading,
and the schema rules turning activity structure into LTL properties.

Diagram documents are JSON::

    {"lifelines": ["SecureBaseAction", "InterceptingValidator", ...],
     "messages": [{"from": null, "to": "SecureBaseAction", "label": "invokes"},
                  {"from": "SecureBaseAction", "to": "InterceptingValidator",
                   "label": "validate"}, ...],
     "fragments": [{"kind": "alt", "condition": 3, "then": [4], "else": [5]}]}

``from`` may be null for a message arriving from outside the diagram. The
event of a message is ``"<to>.<label>"``. Alternatives (``alt``) take a
``condition`` that is either the index of the message immediately before
the fragment or a guard string; parallel fragments (``par``) take
``branches``, a list of message-index lists.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

from secadt.errors import DiagramError, UnmatchedConstructWarning
from secadt.ltl import LtlProperty, Var, parse_ltl, rename


@dataclass(frozen=True)
class Message:
    source: str | None
    target: str
    label: str
    guard: str | None = None

    @property
    def event(self) -> str:
        return f"{self.target}.{self.label}"


@dataclass(frozen=True)
class Fragment:
    kind: str  # "alt" or "par"
    branches: tuple[tuple[int, ...], ...]
    condition: int | str | None = None

    @property
    def span(self) -> tuple[int, int]:
        indices = [i for b in self.branches for i in b]
        return min(indices), max(indices)


@dataclass(frozen=True)
class SequenceDiagram:
    lifelines: tuple[str, ...]
    messages: tuple[Message, ...]
    fragments: tuple[Fragment, ...] = ()
    name: str = ""


def parse_diagram(text: str, name: str = "") -> SequenceDiagram:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DiagramError(f"{name or 'diagram'}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return diagram_from_dict(doc, name)


def read_diagram(path) -> SequenceDiagram:
    with open(path, encoding="utf-8") as fh:
        return parse_diagram(fh.read(), name=str(path))


def diagram_from_dict(doc, name: str = "") -> SequenceDiagram:
    def fail(path, msg):
        raise DiagramError(f"{name or 'diagram'}: {path}: {msg}")

    if not isinstance(doc, dict):
        fail("$", "expected an object")
    lifelines = doc.get("lifelines")
    if not isinstance(lifelines, list) or not all(isinstance(x, str) and x for x in lifelines):
        fail("$.lifelines", "expected a list of non-empty names")
    if len(set(lifelines)) != len(lifelines):
        fail("$.lifelines", "duplicate lifeline")
    raw_messages = doc.get("messages", [])
    if not isinstance(raw_messages, list):
        fail("$.messages", "expected a list")
    messages = []
    for i, m in enumerate(raw_messages):
        path = f"$.messages[{i}]"
        if not isinstance(m, dict):
            fail(path, "expected an object")
        source, target, label = m.get("from"), m.get("to"), m.get("label")
        if source is not None and source not in lifelines:
            fail(f"{path}.from", f"unknown lifeline {source!r}")
        if target not in lifelines:
            fail(f"{path}.to", f"unknown lifeline {target!r}")
        if not isinstance(label, str) or not label:
            fail(f"{path}.label", "expected a non-empty string")
        guard = m.get("guard")
        if guard is not None and not isinstance(guard, str):
            fail(f"{path}.guard", "expected a string")
        messages.append(Message(source, target, label, guard))

    fragments = []
    for i, f in enumerate(doc.get("fragments", [])):
        path = f"$.fragments[{i}]"
        if not isinstance(f, dict):
            fail(path, "expected an object")
        kind = f.get("kind")
        if kind == "alt":
            branches = (f.get("then", []), f.get("else", []))
            condition = f.get("condition")
            if not isinstance(condition, (int, str)) or isinstance(condition, bool):
                fail(f"{path}.condition", "expected a message index or a guard string")
        elif kind == "par":
            branches = f.get("branches", [])
            condition = None
            if len(branches) < 2:
                fail(f"{path}.branches", "a parallel fragment needs at least two branches")
        else:
            fail(f"{path}.kind", f"unsupported fragment kind {kind!r}")
        for b in branches:
            if not isinstance(b, list) or not all(isinstance(x, int) and 0 <= x < len(messages) for x in b):
                fail(path, "branches must list valid message indices")
            if b != sorted(b):
                fail(path, "branch indices must be increasing")
        flat = [x for b in branches for x in b]
        if not flat:
            fail(path, "fragment has no messages")
        if flat != list(range(flat[0], flat[0] + len(flat))):
            fail(path, "branches must partition a contiguous message range")
        frag = Fragment(kind, tuple(tuple(b) for b in branches), condition)
        if kind == "alt" and isinstance(condition, int) and condition != frag.span[0] - 1:
            fail(f"{path}.condition", "must reference the message immediately before the fragment")
        fragments.append(frag)
    fragments.sort(key=lambda fr: fr.span[0])
    for a, b in zip(fragments, fragments[1:]):
        if b.span[0] <= a.span[1]:
            fail("$.fragments", "fragments overlap")
    return SequenceDiagram(tuple(lifelines), tuple(messages), tuple(fragments), name)


def diagram_to_dict(diagram: SequenceDiagram) -> dict:
    messages = []
    for m in diagram.messages:
        d = {"from": m.source, "to": m.target, "label": m.label}
        if m.guard is not None:
            d["guard"] = m.guard
        messages.append(d)
    fragments = []
    for f in diagram.fragments:
        if f.kind == "alt":
            fragments.append({"kind": "alt", "condition": f.condition,
                              "then": list(f.branches[0]), "else": list(f.branches[1])})
        else:
            fragments.append({"kind": "par", "branches": [list(b) for b in f.branches]})
    return {"lifelines": list(diagram.lifelines), "messages": messages, "fragments": fragments}


# activity diagrams

INITIAL, FINAL, ACTION, DECISION, FORK, JOIN = "initial", "final", "action", "decision", "fork", "join"


@dataclass(frozen=True)
class ActivityNode:
    id: int
    kind: str
    event: str | None = None
    lifeline: str | None = None
    mode: str | None = None  # "xor" or "and" on joins
    messages: tuple[int, ...] = ()

    @property
    def carries_event(self) -> bool:
        return self.kind in (ACTION, DECISION) and self.event is not None


@dataclass(frozen=True)
class ActivityEdge:
    source: int
    target: int
    guard: bool | None = None


@dataclass(frozen=True)
class ActivityDiagram:
    nodes: tuple[ActivityNode, ...]
    edges: tuple[ActivityEdge, ...]
    unmatched: tuple[str, ...] = ()
    name: str = ""

    def successors(self, node_id: int):
        return [e for e in self.edges if e.source == node_id]

    def predecessors(self, node_id: int):
        return [e for e in self.edges if e.target == node_id]


class _Builder:
    def __init__(self):
        self.nodes: list[ActivityNode] = []
        self.edges: list[ActivityEdge] = []
        self.unmatched: list[str] = []

    def node(self, kind, **kw) -> int:
        nid = len(self.nodes)
        self.nodes.append(ActivityNode(nid, kind, **kw))
        return nid

    def link(self, frontier, target, join_mode=None):
        """Connect pending (node, guard) pairs to *target*, merging first if needed."""
        if len(frontier) > 1:
            join = self.node(JOIN, mode=join_mode or "xor")
            for src, guard in frontier:
                self.edges.append(ActivityEdge(src, join, guard))
            self.edges.append(ActivityEdge(join, target))
        else:
            for src, guard in frontier:
                self.edges.append(ActivityEdge(src, target, guard))

    def warn(self, text):
        self.unmatched.append(text)
        warnings.warn(text, UnmatchedConstructWarning, stacklevel=4)


def seq_to_activity(diagram: SequenceDiagram) -> ActivityDiagram:
    """Read the message flow of *diagram* as an activity diagram.

    Consecutive messages become chained actions. The message just before an
    ``alt`` fragment becomes a decision with true/false edges into the two
    branches; a lone guarded message is an alternative whose false edge skips
    it. A ``par`` fragment becomes a fork and a join. Branch ends meet in a
    join (``xor`` after alternatives, ``and`` after parallel branches).
    """
    b = _Builder()
    msgs = diagram.messages
    frag_at = {f.span[0]: f for f in diagram.fragments}
    in_fragment = {i for f in diagram.fragments for br in f.branches for i in br}
    # a lone guarded message acts as a one-branch alternative
    for i, m in enumerate(msgs):
        if m.guard is not None and i not in in_fragment and i not in frag_at:
            frag_at[i] = Fragment("alt", ((i,), ()), m.guard)
            in_fragment.add(i)
    decision_before = {f.span[0] - 1 for f in frag_at.values() if f.kind == "alt"}

    def action(i):
        m = msgs[i]
        kind = DECISION if i in decision_before else ACTION
        return b.node(kind, event=m.event, lifeline=m.target, messages=(i,))

    def chain(indices, frontier):
        for i in indices:
            nid = action(i)
            b.link(frontier, nid)
            frontier = [(nid, None)]
        return frontier

    start = b.node(INITIAL)
    frontier = [(start, None)]
    join_mode = None
    i = 0
    while i < len(msgs):
        frag = frag_at.get(i)
        if frag is None:
            nid = action(i)
            b.link(frontier, nid, join_mode)
            frontier, join_mode = [(nid, None)], None
            i += 1
            continue
        lo, hi = frag.span
        if frag.kind == "alt":
            prev = frontier[0][0] if len(frontier) == 1 else None
            if prev is None or b.nodes[prev].kind != DECISION:
                # nothing usable before the fragment: anonymous decision
                b.warn(f"{diagram.name or 'diagram'}: alternative at message {lo} has no "
                       f"preceding call to test; no decision property")
                dec = b.node(DECISION, messages=())
                b.link(frontier, dec, join_mode)
                prev = dec
            then_branch, else_branch = frag.branches
            ends = []
            for guard, branch in ((True, then_branch), (False, else_branch)):
                if branch:
                    ends.extend(chain(branch, [(prev, guard)]))
                else:
                    ends.append((prev, guard))
            frontier, join_mode = ends, "xor"
        else:
            fork = b.node(FORK, messages=())
            b.link(frontier, fork, join_mode)
            ends = []
            for branch in frag.branches:
                ends.extend(chain(branch, [(fork, None)]))
            frontier, join_mode = ends, "and"
        i = hi + 1
    end = b.node(FINAL)
    b.link(frontier, end, join_mode)
    return ActivityDiagram(tuple(b.nodes), tuple(b.edges), tuple(b.unmatched), diagram.name)


# rules


@dataclass(frozen=True)
class Schema:
    """One transformation rule: a property template over placeholder atoms."""

    id: str
    construct: str
    template: str

    def instantiate(self, location: str = "", **atoms) -> LtlProperty:
        formula = rename(parse_ltl(self.template), atoms)
        return LtlProperty(formula, self.id, location)


# Placeholders: a = trigger, b = expected effect, c = alternative effect or
# second trigger. New constructs are added here as data.
RULES = {
    "R1": Schema("R1", "call chain across lifelines", 'G("a" -> F "b")'),
    "R2": Schema("R2", "decision", 'G(("a" -> F "b") xor ((not "a") -> F "c"))'),
    "R3": Schema("R3", "fork", 'G("a" -> (F "b" and F "c"))'),
    "R4": Schema("R4", "exclusive join", 'G(("a" xor "c") -> F "b")'),
    "R5": Schema("R5", "parallel join", 'G(("a" and "c") -> F "b")'),
    "R6": Schema("R6", "call chain on one lifeline", 'G("a" -> F "b")'),
}


def _first_events(act: ActivityDiagram, node_id: int, guard=None):
    """Event-bearing nodes reached first from *node_id*, through joins/forks."""
    out = []
    for e in act.successors(node_id):
        if guard is not None and e.guard is not guard:
            continue
        target = act.nodes[e.target]
        if target.carries_event:
            out.append(target)
        elif target.kind in (JOIN,):
            out.extend(_first_events(act, target.id))
    return out


def activity_to_ltl(activity: ActivityDiagram) -> list[LtlProperty]:
    """One property per matched schema instance, in node order."""
    props: list[LtlProperty] = []
    nodes = activity.nodes
    where = activity.name or "diagram"

    def loc(*ids):
        msgs = [str(m) for i in ids for m in nodes[i].messages]
        return f"{where}#" + ",".join(msgs)

    for node in nodes:
        if node.carries_event:
            for e in activity.successors(node.id):
                target = nodes[e.target]
                if e.guard is None and target.carries_event:
                    rule = "R6" if target.lifeline == node.lifeline else "R1"
                    props.append(RULES[rule].instantiate(loc(node.id, target.id), a=node.event, b=target.event))
        if node.kind == DECISION and node.event is not None:
            yes = _first_events(activity, node.id, True)
            no = _first_events(activity, node.id, False)
            if len(yes) == 1 and len(no) == 1:
                props.append(RULES["R2"].instantiate(loc(node.id, yes[0].id, no[0].id),
                                                     a=node.event, b=yes[0].event, c=no[0].event))
            else:
                _unmatched(f"{where}: decision on {node.event} lacks a single call on each branch")
        elif node.kind == FORK:
            before = [nodes[e.source] for e in activity.predecessors(node.id)]
            after = _first_events(activity, node.id)
            if len(before) == 1 and before[0].carries_event and len(after) == 2:
                props.append(RULES["R3"].instantiate(loc(before[0].id, after[0].id, after[1].id),
                                                     a=before[0].event, b=after[0].event, c=after[1].event))
            else:
                _unmatched(f"{where}: fork needs one triggering call and exactly two branches")
        elif node.kind == JOIN:
            incoming = activity.predecessors(node.id)
            ends = [nodes[e.source] for e in incoming]
            after = _first_events(activity, node.id)
            if not after or any(e.guard is not None for e in incoming) \
                    or not all(n.carries_event for n in ends):
                continue  # flow ends, or an empty branch already covered by the decision
            if len(ends) == 2 and len(after) == 1:
                rule = "R4" if node.mode == "xor" else "R5"
                props.append(RULES[rule].instantiate(loc(ends[0].id, ends[1].id, after[0].id),
                                                     a=ends[0].event, c=ends[1].event, b=after[0].event))
            else:
                _unmatched(f"{where}: join of {len(ends)} branches is not a known schema")
    return props


def _unmatched(text):
    warnings.warn(text, UnmatchedConstructWarning, stacklevel=3)


def diagram_properties(diagram: SequenceDiagram) -> list[LtlProperty]:
    return activity_to_ltl(seq_to_activity(diagram))
