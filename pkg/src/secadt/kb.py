"""Security knowledge base: attacks, steps, techniques, the countermeasure to
pattern mediation chain, inter-pattern relations, Given/When/Then sections,
procedures, test architectures, application contexts and diagram references.

On disk a knowledge base is a directory of headered UTF-8 CSV files, one per
entity table plus ``relations.csv`` for typed edges and ``diagrams.csv`` for
the diagram index (paths relative to the directory). ``SCHEMA`` lists the
columns of every file; ``RELATION_SCHEMA`` the allowed edge types.
"""

from __future__ import annotations

import csv
import os
import shutil
from collections import defaultdict
from dataclasses import dataclass, field, fields
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

from secadt.errors import (
    KBFileMissingError,
    KBIntegrityError,
    KBParseError,
    MissingSectionError,
    UnknownEntityError,
)


@dataclass(frozen=True)
class Attack:
    id: str
    name: str
    parent: str = ""
    ordinal: int = 0


@dataclass(frozen=True)
class AttackStep:
    id: str
    attack: str
    name: str
    number: str = ""
    parent: str = ""
    ordinal: int = 0


@dataclass(frozen=True)
class Technique:
    id: str
    step: str
    text: str
    ordinal: int = 0


@dataclass(frozen=True)
class SecurityPattern:
    id: str
    name: str


@dataclass(frozen=True)
class SecurityPrinciple:
    id: str
    name: str
    parent: str = ""


@dataclass(frozen=True)
class Cluster:
    id: str
    name: str


@dataclass(frozen=True)
class Countermeasure:
    id: str
    text: str


@dataclass(frozen=True)
class StrongPoint:
    id: str
    text: str


@dataclass(frozen=True)
class TestSection:
    __test__ = False

    id: str
    kind: str  # given | when | then
    title: str
    procedure: str
    context: str


@dataclass(frozen=True)
class Procedure:
    id: str
    comment: str = ""
    snippet: str = ""


@dataclass(frozen=True)
class TestArchitecture:
    __test__ = False

    id: str
    text: str


@dataclass(frozen=True)
class ApplicationContext:
    id: str
    name: str


@dataclass(frozen=True)
class SequenceDiagramRef:
    pattern: str
    context: str
    path: str


@dataclass(frozen=True)
class Relation:
    source_type: str
    source_id: str
    kind: str
    target_type: str
    target_id: str

    def __str__(self):
        return f"{self.source_type}:{self.source_id} -{self.kind}-> {self.target_type}:{self.target_id}"


@dataclass(frozen=True)
class InterPatternRelation:
    source: str
    kind: str
    target: str

    def __str__(self):
        return f"{self.source} {self.kind} {self.target}"


PATTERN_RELATIONS = ("depend", "benefit", "impair", "alternative", "conflict")
SECTION_RELATIONS = {"testG": "given", "testW": "when", "testT": "then"}

# (source type, relation kind, target type)
RELATION_SCHEMA = {
    ("AttackStep", "preventedBy", "Countermeasure"),
    ("Countermeasure", "groupedIn", "Cluster"),
    ("Cluster", "refersTo", "Principle"),
    ("Principle", "realizedBy", "StrongPoint"),
    ("StrongPoint", "characterizes", "Pattern"),
    ("AttackStep", "testG", "TestSection"),
    ("AttackStep", "testW", "TestSection"),
    ("AttackStep", "testT", "TestSection"),
    ("AttackStep", "testedWith", "TestArchitecture"),
    ("AttackStep", "inContext", "ApplicationContext"),
} | {("Pattern", kind, "Pattern") for kind in PATTERN_RELATIONS}

# file stem -> (entity class, entity type name used in relations.csv)
TABLES = {
    "attacks": (Attack, "Attack"),
    "steps": (AttackStep, "AttackStep"),
    "techniques": (Technique, "Technique"),
    "patterns": (SecurityPattern, "Pattern"),
    "principles": (SecurityPrinciple, "Principle"),
    "clusters": (Cluster, "Cluster"),
    "countermeasures": (Countermeasure, "Countermeasure"),
    "strongpoints": (StrongPoint, "StrongPoint"),
    "sections": (TestSection, "TestSection"),
    "procedures": (Procedure, "Procedure"),
    "architectures": (TestArchitecture, "TestArchitecture"),
    "contexts": (ApplicationContext, "ApplicationContext"),
}

SCHEMA = {stem: [f.name for f in fields(cls)] for stem, (cls, _) in TABLES.items()}
SCHEMA["relations"] = [f.name for f in fields(Relation)]
SCHEMA["diagrams"] = [f.name for f in fields(SequenceDiagramRef)]

MAX_PRINCIPLE_DEPTH = 4


@dataclass(frozen=True)
class Violation:
    entity: str
    relation: str
    rule: str
    detail: str = ""

    def __str__(self):
        text = f"{self.entity}: {self.rule}"
        if self.relation:
            text += f" [{self.relation}]"
        if self.detail:
            text += f" - {self.detail}"
        return text


class PatternMatch(NamedTuple):
    pattern: str
    relations: tuple[InterPatternRelation, ...]


class SectionInfo(NamedTuple):
    section: TestSection
    procedure: Procedure | None


class GWT(NamedTuple):
    given: SectionInfo
    when: SectionInfo
    then: SectionInfo


@dataclass(frozen=True, eq=False)
class KnowledgeBase:
    """Immutable once loaded; queries are memoised on first use."""

    attacks: dict[str, Attack] = field(default_factory=dict)
    steps: dict[str, AttackStep] = field(default_factory=dict)
    techniques: dict[str, Technique] = field(default_factory=dict)
    patterns: dict[str, SecurityPattern] = field(default_factory=dict)
    principles: dict[str, SecurityPrinciple] = field(default_factory=dict)
    clusters: dict[str, Cluster] = field(default_factory=dict)
    countermeasures: dict[str, Countermeasure] = field(default_factory=dict)
    strongpoints: dict[str, StrongPoint] = field(default_factory=dict)
    sections: dict[str, TestSection] = field(default_factory=dict)
    procedures: dict[str, Procedure] = field(default_factory=dict)
    architectures: dict[str, TestArchitecture] = field(default_factory=dict)
    contexts: dict[str, ApplicationContext] = field(default_factory=dict)
    relations: tuple[Relation, ...] = ()
    diagrams: tuple[SequenceDiagramRef, ...] = ()
    root: Path | None = None

    def __eq__(self, other):
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        return all(getattr(self, s) == getattr(other, s) for s in TABLES) \
            and set(self.relations) == set(other.relations) \
            and set(self.diagrams) == set(other.diagrams)

    __hash__ = None

    def table(self, entity_type: str) -> dict:
        return getattr(self, _TYPE_TO_STEM[entity_type])

    # indexes

    @cached_property
    def _out(self):
        index = defaultdict(list)
        for r in self.relations:
            index[(r.source_type, r.source_id, r.kind)].append(r.target_id)
        return index

    def targets(self, source_type, source_id, kind) -> list[str]:
        return list(self._out.get((source_type, source_id, kind), ()))

    @cached_property
    def _children(self):
        sub_attacks = defaultdict(list)
        for a in self.attacks.values():
            if a.parent:
                sub_attacks[a.parent].append(a)
        top_steps = defaultdict(list)
        sub_steps = defaultdict(list)
        for s in self.steps.values():
            (sub_steps[s.parent] if s.parent else top_steps[s.attack]).append(s)
        techniques = defaultdict(list)
        for t in self.techniques.values():
            techniques[t.step].append(t)
        order = lambda x: (x.ordinal, x.id)  # noqa: E731
        return ({k: sorted(v, key=order) for k, v in sub_attacks.items()},
                {k: sorted(v, key=order) for k, v in top_steps.items()},
                {k: sorted(v, key=order) for k, v in sub_steps.items()},
                {k: sorted(v, key=order) for k, v in techniques.items()})

    def sub_attacks(self, attack_id) -> list[Attack]:
        return self._children[0].get(attack_id, [])

    def attack_steps(self, attack_id) -> list[AttackStep]:
        """Top-level steps of an attack in execution order."""
        return self._children[1].get(attack_id, [])

    def sub_steps(self, step_id) -> list[AttackStep]:
        return self._children[2].get(step_id, [])

    def step_techniques(self, step_id) -> list[Technique]:
        return self._children[3].get(step_id, [])

    def is_leaf_step(self, step_id) -> bool:
        return not self.sub_steps(step_id)

    def top_attack(self, attack_id) -> str:
        seen = set()
        while attack_id in self.attacks and self.attacks[attack_id].parent and attack_id not in seen:
            seen.add(attack_id)
            attack_id = self.attacks[attack_id].parent
        return attack_id

    @cached_property
    def pattern_relations(self) -> tuple[InterPatternRelation, ...]:
        return tuple(InterPatternRelation(r.source_id, r.kind, r.target_id) for r in self.relations
                     if r.source_type == "Pattern" and r.target_type == "Pattern"
                     and r.kind in PATTERN_RELATIONS)

    @cached_property
    def step_pattern_index(self) -> dict[str, tuple[str, ...]]:
        """Materialised step -> countermeasure -> cluster -> principle ->
        strong point -> pattern chain, patterns in table order."""
        rank = {p: i for i, p in enumerate(self.patterns)}
        index = {}
        for step in self.steps:
            found = set()
            for cm in self.targets("AttackStep", step, "preventedBy"):
                for cl in self.targets("Countermeasure", cm, "groupedIn"):
                    for pr in self.targets("Cluster", cl, "refersTo"):
                        for sp in self.targets("Principle", pr, "realizedBy"):
                            found.update(p for p in self.targets("StrongPoint", sp, "characterizes")
                                         if p in self.patterns)
            index[step] = tuple(sorted(found, key=rank.__getitem__))
        return index

    # queries

    def _require_step(self, step_id):
        if step_id not in self.steps:
            raise UnknownEntityError(f"unknown attack step {step_id!r}")

    def countermeasure_patterns(self, step_id) -> list[PatternMatch]:
        self._require_step(step_id)
        chosen = self.step_pattern_index[step_id]
        members = set(chosen)
        related = [r for r in self.pattern_relations if r.source in members and r.target in members]
        return [PatternMatch(p, tuple(r for r in related if p in (r.source, r.target))) for p in chosen]

    def test_sections(self, step_id, context_id) -> GWT:
        self._require_step(step_id)
        found = {}
        for relation, kind in SECTION_RELATIONS.items():
            candidates = [self.sections[s] for s in self.targets("AttackStep", step_id, relation)
                          if s in self.sections and self.sections[s].context == context_id]
            if not candidates:
                raise MissingSectionError(step_id, relation, context_id)
            section = candidates[0]
            found[kind] = SectionInfo(section, self.procedures.get(section.procedure))
        return GWT(found["given"], found["when"], found["then"])

    def architecture_for(self, step_id) -> str:
        return self.architecture_entity(step_id).text

    def architecture_entity(self, step_id) -> TestArchitecture:
        self._require_step(step_id)
        ids = [a for a in self.targets("AttackStep", step_id, "testedWith") if a in self.architectures]
        if not ids:
            raise UnknownEntityError(f"step {step_id!r} has no test architecture")
        return self.architectures[ids[0]]

    def context_of(self, step_id) -> str | None:
        ids = self.targets("AttackStep", step_id, "inContext")
        return ids[0] if ids else None

    def diagram_refs(self, pattern_id, context_id) -> list[SequenceDiagramRef]:
        if pattern_id not in self.patterns:
            raise UnknownEntityError(f"unknown security pattern {pattern_id!r}")
        return [d for d in self.diagrams if d.pattern == pattern_id and d.context == context_id]

    def diagrams_for(self, pattern_id, context_id):
        from secadt.diagram import parse_diagram

        out = []
        for ref in self.diagram_refs(pattern_id, context_id):
            path = Path(ref.path)
            if not path.is_absolute() and self.root is not None:
                path = self.root / path
            # named by the index entry so property locations do not depend on the install path
            out.append(parse_diagram(path.read_text(encoding="utf-8"), name=ref.path))
        return out


_TYPE_TO_STEM = {etype: stem for stem, (_, etype) in TABLES.items()}


# module-level query functions


def countermeasure_patterns(kb: KnowledgeBase, step_id: str) -> list[PatternMatch]:
    return kb.countermeasure_patterns(step_id)


def test_sections(kb: KnowledgeBase, step_id: str, context_id: str) -> GWT:
    return kb.test_sections(step_id, context_id)


test_sections.__test__ = False  # keep pytest from collecting it


def diagrams_for(kb: KnowledgeBase, pattern_id: str, context_id: str):
    return kb.diagrams_for(pattern_id, context_id)


def architecture_for(kb: KnowledgeBase, step_id: str) -> str:
    return kb.architecture_for(step_id)


# validation


def validate(kb: KnowledgeBase) -> list[Violation]:
    out: list[Violation] = []
    add = lambda *a: out.append(Violation(*a))  # noqa: E731
    entity_types = {etype for _, etype in TABLES.values()}

    for r in kb.relations:
        key = (r.source_type, r.kind, r.target_type)
        if r.source_type not in entity_types or r.target_type not in entity_types:
            add(f"{r.source_type}:{r.source_id}", r.kind, "unknown-entity-type", str(r))
            continue
        if key not in RELATION_SCHEMA:
            add(f"{r.source_type}:{r.source_id}", r.kind, "relation-not-in-schema", str(r))
        for etype, eid in ((r.source_type, r.source_id), (r.target_type, r.target_id)):
            if eid not in kb.table(etype):
                add(f"{etype}:{eid}", r.kind, "dangling-edge", str(r))
        if r.source_type == "Pattern" and r.target_type == "Pattern" and r.source_id == r.target_id:
            add(f"Pattern:{r.source_id}", r.kind, "self-relation")

    for a in kb.attacks.values():
        if a.parent and a.parent not in kb.attacks:
            add(f"Attack:{a.id}", "parent", "dangling-edge", f"unknown parent attack {a.parent!r}")
    for a in kb.attacks.values():
        if _has_cycle(a.id, lambda x: kb.attacks[x].parent if x in kb.attacks else ""):
            add(f"Attack:{a.id}", "parent", "cyclic-sub-attacks")

    for s in kb.steps.values():
        ref = f"AttackStep:{s.id}"
        if s.attack not in kb.attacks:
            add(ref, "attack", "dangling-edge", f"unknown attack {s.attack!r}")
        if s.parent:
            parent = kb.steps.get(s.parent)
            if parent is None:
                add(ref, "parent", "dangling-edge", f"unknown parent step {s.parent!r}")
            elif parent.attack != s.attack:
                add(ref, "parent", "parent-step-of-other-attack")
        if _has_cycle(s.id, lambda x: kb.steps[x].parent if x in kb.steps else ""):
            add(ref, "parent", "cyclic-sub-steps")
        if not kb.is_leaf_step(s.id):
            continue
        context = kb.context_of(s.id)
        for relation, expected in (("testedWith", "TestArchitecture"), ("inContext", "ApplicationContext")):
            count = len(kb.targets("AttackStep", s.id, relation))
            if count != 1:
                add(ref, relation, "exactly-one", f"found {count} {expected} link(s)")
        for relation, kind in SECTION_RELATIONS.items():
            linked = [kb.sections[x] for x in kb.targets("AttackStep", s.id, relation) if x in kb.sections]
            for sec in linked:
                if sec.kind != kind:
                    add(f"TestSection:{sec.id}", relation, "section-kind-mismatch",
                        f"{sec.kind} section attached as {kind}")
            per_context = defaultdict(int)
            for sec in linked:
                per_context[sec.context] += 1
            if context is not None and per_context.get(context, 0) == 0:
                add(ref, relation, "missing-section", f"no {kind} section for context {context!r}")
            for ctx, n in per_context.items():
                if n > 1:
                    add(ref, relation, "duplicate-section", f"{n} {kind} sections for context {ctx!r}")

    for t in kb.techniques.values():
        if t.step not in kb.steps:
            add(f"Technique:{t.id}", "step", "dangling-edge", f"unknown step {t.step!r}")

    for sec in kb.sections.values():
        if sec.kind not in SECTION_RELATIONS.values():
            add(f"TestSection:{sec.id}", "kind", "unknown-section-kind", sec.kind)
        if sec.procedure not in kb.procedures:
            add(f"TestSection:{sec.id}", "procedure", "dangling-edge", f"unknown procedure {sec.procedure!r}")
        if sec.context not in kb.contexts:
            add(f"TestSection:{sec.id}", "context", "dangling-edge", f"unknown context {sec.context!r}")

    for p in kb.principles.values():
        ref = f"Principle:{p.id}"
        if p.parent and p.parent not in kb.principles:
            add(ref, "parent", "dangling-edge", f"unknown parent principle {p.parent!r}")
        elif _has_cycle(p.id, lambda x: kb.principles[x].parent if x in kb.principles else ""):
            add(ref, "parent", "cyclic-principles")
        elif _depth(p.id, kb.principles) > MAX_PRINCIPLE_DEPTH:
            add(ref, "parent", "principle-hierarchy-too-deep",
                f"level {_depth(p.id, kb.principles)} > {MAX_PRINCIPLE_DEPTH}")

    for d in kb.diagrams:
        ref = f"Pattern:{d.pattern}"
        if d.pattern not in kb.patterns:
            add(ref, "diagram", "dangling-edge", f"unknown pattern in diagram index ({d.path})")
        if d.context not in kb.contexts:
            add(ref, "diagram", "dangling-edge", f"unknown context {d.context!r} ({d.path})")
        path = Path(d.path)
        if not path.is_absolute() and kb.root is not None:
            path = kb.root / path
        if not path.is_file():
            add(ref, "diagram", "diagram-file-missing", d.path)
    return out


def _has_cycle(start, parent_of) -> bool:
    seen = {start}
    current = parent_of(start)
    while current:
        if current in seen:
            return True
        seen.add(current)
        current = parent_of(current)
    return False


def _depth(pid, principles) -> int:
    depth = 1
    while principles[pid].parent and principles[pid].parent in principles:
        pid = principles[pid].parent
        depth += 1
    return depth


# files


def _convert(cls, row, path, lineno):
    kwargs = {}
    for f in fields(cls):
        value = row.get(f.name)
        if value is None:
            value = ""
        if f.type in ("int", int):
            try:
                value = int(value) if value != "" else 0
            except ValueError:
                raise KBParseError(f"column {f.name!r} must be an integer, got {value!r}", path, lineno) from None
        kwargs[f.name] = value
    return cls(**kwargs)


def _read_table(directory: Path, stem: str, cls):
    path = directory / f"{stem}.csv"
    if not path.is_file():
        raise KBFileMissingError(f"knowledge base file missing: {path}")
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in SCHEMA[stem] if c not in header]
        if missing:
            raise KBParseError(f"missing column(s) {missing}", path, 1)
        for row in reader:
            lineno = reader.line_num
            if None in row:
                raise KBParseError("row has more fields than the header", path, lineno)
            rows.append(_convert(cls, row, path, lineno))
    return path, rows


def load_kb(directory, check: bool = True) -> KnowledgeBase:
    """Load a knowledge base directory; see ``SCHEMA`` for the file layout.

    With *check*, integrity violations raise :class:`KBIntegrityError`.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise KBFileMissingError(f"knowledge base directory not found: {directory}")
    tables = {}
    for stem, (cls, _) in TABLES.items():
        path, rows = _read_table(directory, stem, cls)
        table = {}
        for i, row in enumerate(rows, start=2):
            if not row.id:
                raise KBParseError("empty identifier", path, i)
            if row.id in table:
                raise KBParseError(f"duplicate identifier {row.id!r}", path, i)
            table[row.id] = row
        tables[stem] = table
    _, relations = _read_table(directory, "relations", Relation)
    _, diagrams = _read_table(directory, "diagrams", SequenceDiagramRef)
    kb = KnowledgeBase(**tables, relations=tuple(relations), diagrams=tuple(diagrams), root=directory)
    if check:
        violations = validate(kb)
        if violations:
            raise KBIntegrityError(violations)
    kb.step_pattern_index  # materialise the mediation chain once
    return kb


def save_kb(kb: KnowledgeBase, directory) -> None:
    """Write *kb* as CSV files; referenced diagram files are copied along."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for stem in TABLES:
        _write_rows(directory / f"{stem}.csv", SCHEMA[stem],
                    [_as_row(e) for e in getattr(kb, stem).values()])
    _write_rows(directory / "relations.csv", SCHEMA["relations"], [_as_row(r) for r in kb.relations])
    _write_rows(directory / "diagrams.csv", SCHEMA["diagrams"], [_as_row(d) for d in kb.diagrams])
    if kb.root is not None:
        for d in kb.diagrams:
            if os.path.isabs(d.path):
                continue
            src, dst = Path(kb.root) / d.path, directory / d.path
            if src.is_file() and src.resolve() != dst.resolve():
                dst.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(src, dst)


def _as_row(entity):
    return {f.name: getattr(entity, f.name) for f in fields(entity)}


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
