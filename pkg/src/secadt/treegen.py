"""Attack tree generation from the knowledge base, pattern choice, expansion
of an initial tree into the final tree, and the test-architecture report.

Generated trees have this shape::

    attack            disjunctive over sub-attacks, or sequential over steps
      step            sequential over sub-steps, or disjunctive over techniques
        technique     leaf
        ~ defense     counter-child: a single pattern leaf, or a conjunctive
                      "Pattern Composition" node over pattern leaves,
                      "p1 depend p2" / "p1 benefit p2" nodes and disjunctive
                      "Alternative" nodes

Attack and step nodes are labelled by their knowledge-base identifiers so the
tree can be mapped back to the base.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from secadt.adterm import PROPONENT, Atom, Term, iter_badsteps, leaves, substitute, to_adterm
from secadt.adtree import (
    ADTree,
    CONJUNCTIVE,
    DEFENSE,
    DISJUNCTIVE,
    SEQUENTIAL,
    Node,
    attack,
    defense,
)
from secadt.errors import (
    GenerationWarning,
    InvalidSelectionError,
    PatternConflictError,
    ResultsFileError,
    UnknownEntityError,
    UnresolvedAlternativeError,
)
from secadt.kb import KnowledgeBase

COMPOSITION = "Pattern Composition"
ALTERNATIVE = "Alternative"
CONJOINED = ("depend", "benefit")
EXCLUSIVE = ("impair", "conflict")


# generation


def generate_attack_tree(kb: KnowledgeBase, attack_id: str) -> ADTree:
    if attack_id not in kb.attacks:
        raise UnknownEntityError(f"unknown attack {attack_id!r}")
    return ADTree(_attack_node(kb, attack_id, ()))


def _attack_node(kb, attack_id, ancestors) -> Node:
    if attack_id in ancestors:
        raise UnknownEntityError(f"cyclic sub-attack chain through {attack_id!r}")
    subs = [_attack_node(kb, a.id, ancestors + (attack_id,)) for a in kb.sub_attacks(attack_id)]
    steps = [_step_node(kb, s) for s in kb.attack_steps(attack_id)]
    if subs and steps:
        # own steps become one more way of achieving the attack
        own = attack(kb.attacks[attack_id].name or f"{attack_id} steps", *steps, refinement=SEQUENTIAL)
        return attack(attack_id, own, *subs)
    if subs:
        return attack(attack_id, *subs)
    if steps:
        return attack(attack_id, *steps, refinement=SEQUENTIAL)
    warnings.warn(f"attack {attack_id!r} has no recorded steps; it is generated as a single "
                  "undefended step and needs curation", GenerationWarning, stacklevel=3)
    return attack(attack_id)


def _step_node(kb, step) -> Node:
    subs = kb.sub_steps(step.id)
    if subs:
        return attack(step.id, *[_step_node(kb, s) for s in subs], refinement=SEQUENTIAL)
    techniques = [attack(t.text) for t in kb.step_techniques(step.id)]
    patterns = [m.pattern for m in kb.countermeasure_patterns(step.id)]
    if not patterns:
        warnings.warn(f"step {step.id!r} has no countermeasure pattern; it stays undefended",
                      GenerationWarning, stacklevel=4)
        return attack(step.id, *techniques)
    return attack(step.id, *techniques, counter=_defense_node(kb, patterns))


def _defense_node(kb, patterns) -> Node:
    if len(patterns) == 1:
        return defense(patterns[0])
    members = set(patterns)
    relations = [r for r in kb.pattern_relations if r.source in members and r.target in members]

    # alternative groups are the connected components of the alternative edges
    group_of = {p: {p} for p in patterns}
    for r in relations:
        if r.kind == "alternative":
            merged = group_of[r.source] | group_of[r.target]
            for p in merged:
                group_of[p] = merged

    children, used, n_alt = [], set(), 0
    n_groups = len({id(g) for g in group_of.values() if len(g) > 1})
    for p in patterns:
        if p in used:
            continue
        group = group_of[p]
        if len(group) > 1:
            n_alt += 1
            label = ALTERNATIVE if n_groups == 1 else f"{ALTERNATIVE} {n_alt}"
            ordered = [q for q in patterns if q in group]
            children.append(defense(label, *map(defense, ordered)))
            used.update(group)
            continue
        pair = next((r for r in relations if r.kind in CONJOINED and p in (r.source, r.target)
                     and len(group_of[r.source]) == 1 and len(group_of[r.target]) == 1
                     and r.source not in used and r.target not in used), None)
        if pair is not None:
            children.append(defense(str(pair), defense(pair.source), defense(pair.target),
                                    refinement=CONJUNCTIVE))
            used.update((pair.source, pair.target))
        else:
            children.append(defense(p))
            used.add(p)
    return defense(COMPOSITION, *children, refinement=CONJUNCTIVE)


# alternative groups and choice


@dataclass(frozen=True)
class AlternativeGroup:
    step: str
    ordinal: int
    members: tuple[str, ...]

    @property
    def key(self):
        return (self.step, self.ordinal)


@dataclass(frozen=True)
class PatternChoice:
    """Chosen pattern per alternative group, keyed by (step id, ordinal)."""

    selections: Mapping[tuple[str, int], str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "selections", dict(self.selections))


def alternative_groups(tree: ADTree | Node) -> list[AlternativeGroup]:
    """Every disjunctive defense node under a step's counter, in document order."""
    root = tree.root if isinstance(tree, ADTree) else tree
    out = []
    for node in root.walk():
        if node.kind != DEFENSE and node.counter is not None:
            for ordinal, d in enumerate(_group_nodes(node.counter), start=1):
                out.append(AlternativeGroup(node.label, ordinal, tuple(_leaf_labels(d))))
    seen, unique = set(), []
    for g in out:
        if g.key not in seen:
            seen.add(g.key)
            unique.append(g)
    return unique


def _is_group(node) -> bool:
    return node.kind == DEFENSE and node.refinement == DISJUNCTIVE and bool(node.children)


def _group_nodes(node):
    """Outermost disjunctive defense nodes, pre-order."""
    if _is_group(node):
        yield node
        return
    for child in node.children:
        yield from _group_nodes(child)


def _leaf_labels(node):
    return [n.label for n in node.walk() if n.is_leaf and n.kind == DEFENSE]


def choose_patterns(tree: ADTree, choice: PatternChoice, kb: KnowledgeBase | None = None) -> ADTree:
    """Replace every alternative node by its chosen pattern leaf.

    Selections for groups absent from *tree* are ignored, so one choice can
    serve several trees. With *kb* given, a step whose final defense holds both
    members of an impair or conflict relation is refused.
    """
    missing = [g for g in alternative_groups(tree) if g.key not in choice.selections]
    if missing:
        raise UnresolvedAlternativeError(missing)
    root = _choose(tree.root, choice.selections, kb)
    return ADTree(root)


def _choose(node: Node, selections, kb) -> Node:
    children = tuple(_choose(c, selections, kb) for c in node.children)
    counter = node.counter
    if counter is not None and node.kind != DEFENSE:
        counter = _resolve_defense(node.label, counter, selections, [0])
        if kb is not None:
            _check_conflicts(node.label, counter, kb)
    elif counter is not None:
        counter = _choose(counter, selections, kb)
    if children == node.children and counter is node.counter:
        return node
    return Node(node.label, node.kind, node.refinement, children, counter)


def _resolve_defense(step, node: Node, selections, counter) -> Node:
    if _is_group(node):
        counter[0] += 1
        key = (step, counter[0])
        chosen = selections[key]
        members = _leaf_labels(node)
        if chosen not in members:
            raise InvalidSelectionError(
                f"pattern {chosen!r} is not a member of alternative group {step}#{counter[0]} {members}")
        return defense(chosen)
    if node.is_leaf:
        return node
    return node.with_children(_resolve_defense(step, c, selections, counter) for c in node.children)


def _check_conflicts(step, counter: Node, kb: KnowledgeBase) -> None:
    present = set(_leaf_labels(counter))
    for r in kb.pattern_relations:
        if r.kind in EXCLUSIVE and r.source in present and r.target in present:
            raise PatternConflictError(
                f"step {step!r} would combine {r.source!r} and {r.target!r}, which are related by {r.kind!r}")


def read_choice(path) -> PatternChoice:
    selections = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"step-id", "group-ordinal", "chosen-pattern-id"}
        if not needed <= set(reader.fieldnames or ()):
            raise ResultsFileError(f"{path}: choice file needs columns {sorted(needed)}")
        for row in reader:
            try:
                key = (row["step-id"], int(row["group-ordinal"]))
            except ValueError:
                raise ResultsFileError(f"{path}, row {reader.line_num}: group ordinal must be an integer") from None
            if key in selections:
                raise ResultsFileError(f"{path}, row {reader.line_num}: duplicate selection for {key}")
            selections[key] = row["chosen-pattern-id"]
    return PatternChoice(selections)


def write_choice(choice: PatternChoice, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step-id", "group-ordinal", "chosen-pattern-id"])
        for (step, ordinal), pattern in sorted(choice.selections.items()):
            writer.writerow([step, ordinal, pattern])


# expansion


def expand(initial: ADTree, kb: KnowledgeBase, choice: PatternChoice) -> ADTree:
    """Replace every leaf of *initial* by its chosen generated tree."""
    for node in initial.nodes():
        if node.is_leaf and node.kind != DEFENSE and node.label not in kb.attacks:
            raise UnknownEntityError(f"initial tree leaf {node.label!r} is not an attack of the knowledge base")
    cache: dict[str, Node] = {}

    def subtree(label):
        if label not in cache:
            cache[label] = choose_patterns(generate_attack_tree(kb, label), choice, kb).root
        return cache[label]

    def go(node: Node) -> Node:
        if node.kind == DEFENSE:
            return node
        if node.is_leaf:
            generated = subtree(node.label)
            if node.counter is not None and generated.counter is None:
                return Node(generated.label, generated.kind, generated.refinement,
                            generated.children, node.counter)
            return generated
        return Node(node.label, node.kind, node.refinement,
                    tuple(go(c) for c in node.children), node.counter)

    return ADTree(go(initial.root))


def expand_term(initial: Term, kb: KnowledgeBase, choice: PatternChoice, order=None) -> Term:
    """Term-level counterpart of :func:`expand`: substitutes leaves one at a
    time, in *order* when given (any order gives the same term)."""
    labels = order or sorted({x.label for x in leaves(initial) if isinstance(x, Atom) and x.player == PROPONENT})
    out = initial
    for label in labels:
        generated = choose_patterns(generate_attack_tree(kb, label), choice, kb)
        out = substitute(out, label, to_adterm(generated))
    return out


# architecture report


@dataclass(frozen=True)
class ReportEntry:
    step: str
    architecture: str
    context: str


@dataclass(frozen=True)
class ArchitectureReport:
    entries: tuple[ReportEntry, ...] = ()

    def to_text(self) -> str:
        if not self.entries:
            return "No attack step to test.\n"
        by_text: dict[str, list[ReportEntry]] = {}
        for e in self.entries:
            by_text.setdefault(e.architecture, []).append(e)
        lines = [f"Test architectures: {len(by_text)} for {len(self.entries)} attack step(s)"]
        for n, (text, entries) in enumerate(by_text.items(), 1):
            lines += ["", f"[{n}] {text}"]
            lines += [f"    - {e.step} (context {e.context})" for e in entries]
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["step-id", "architecture", "context-id"])
            for e in self.entries:
                writer.writerow([e.step, e.architecture, e.context])


def build_report(tree: ADTree | Term, kb: KnowledgeBase) -> ArchitectureReport:
    term = to_adterm(tree) if isinstance(tree, ADTree) else tree
    entries, seen = [], set()
    for b in iter_badsteps(term):
        if b.step not in kb.steps:
            continue
        try:
            arch = kb.architecture_entity(b.step)
        except UnknownEntityError:
            continue
        key = (b.step, arch.id)
        if key in seen:
            continue
        seen.add(key)
        entries.append(ReportEntry(b.step, arch.text, kb.context_of(b.step) or ""))
    return ArchitectureReport(tuple(entries))


def write_tree_report(report: ArchitectureReport, directory) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    text, table = directory / "architectures.txt", directory / "architectures.csv"
    text.write_text(report.to_text(), encoding="utf-8")
    report.write_csv(table)
    return text, table
