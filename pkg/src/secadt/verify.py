"""Checking pattern properties on method-call traces.

A trace log is a UTF-8 text file with one ``Object.method`` event per line;
a blank line separates traces. A file holding one trace names it after the
file stem, otherwise traces are named ``stem#1``, ``stem#2``... An optional
``manifest.csv`` (columns ``trace,case-id``) in the trace directory records
which test case produced each trace.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from secadt.errors import NoEvidenceWarning, TraceFileError
from secadt.ltl import LtlProperty, check_many, to_symbolic, to_text

TRACE_SUFFIXES = (".log", ".trace", ".txt")
MANIFEST = "manifest.csv"


@dataclass(frozen=True)
class TraceSet:
    traces: dict[str, tuple[str, ...]] = field(default_factory=dict)
    sources: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "traces", {k: tuple(v) for k, v in self.traces.items()})
        for name, trace in self.traces.items():
            if not name:
                raise TraceFileError("trace names must be non-empty")
            if any(not e for e in trace):
                raise TraceFileError(f"trace {name!r} holds an empty event label")

    def __len__(self):
        return len(self.traces)

    @classmethod
    def of(cls, traces: Iterable[Sequence[str]], prefix="t") -> TraceSet:
        return cls({f"{prefix}{i}": tuple(t) for i, t in enumerate(traces, 1)})


def parse_trace_log(text: str, stem: str) -> dict[str, tuple[str, ...]]:
    blocks, current = [], []
    for line in text.splitlines():
        event = line.strip()
        if event:
            current.append(event)
        elif current:
            blocks.append(tuple(current))
            current = []
    if current:
        blocks.append(tuple(current))
    if len(blocks) == 1:
        return {stem: blocks[0]}
    return {f"{stem}#{i}": b for i, b in enumerate(blocks, 1)}


def read_traces(path) -> TraceSet:
    """Load one trace log or every log file of a directory (sorted by name)."""
    path = Path(path)
    if path.is_file():
        files = [path]
    elif path.is_dir():
        files = sorted(p for p in path.iterdir() if p.is_file() and p.suffix in TRACE_SUFFIXES)
    else:
        raise TraceFileError(f"trace path not found: {path}")
    traces: dict[str, tuple[str, ...]] = {}
    for f in files:
        for name, trace in parse_trace_log(f.read_text(encoding="utf-8"), f.stem).items():
            if name in traces:
                raise TraceFileError(f"duplicate trace name {name!r} ({f})")
            traces[name] = trace
    sources = {}
    manifest = (path if path.is_dir() else path.parent) / MANIFEST
    if manifest.is_file():
        with open(manifest, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"trace", "case-id"} <= set(reader.fieldnames):
                raise TraceFileError(f"{manifest}: header must be 'trace,case-id'")
            for row in reader:
                if row["trace"] in sources:
                    raise TraceFileError(f"{manifest}, row {reader.line_num}: trace {row['trace']!r} listed twice")
                sources[row["trace"]] = row["case-id"]
    return TraceSet(traces, sources)


def write_traces(traceset: TraceSet, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, trace in traceset.traces.items():
        (directory / f"{name}.log").write_text("".join(e + "\n" for e in trace), encoding="utf-8")
    if traceset.sources:
        with open(directory / MANIFEST, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["trace", "case-id"])
            writer.writerows(sorted(traceset.sources.items()))


def filter_trace(trace: Sequence[str], alphabet) -> tuple[str, ...]:
    keep = set(alphabet)
    return tuple(e for e in trace if e in keep)


# verdicts


@dataclass(frozen=True)
class PropertyResult:
    prop: LtlProperty
    violations: tuple[tuple[str, int], ...]  # (trace name, position), sorted
    checked: int

    @property
    def holds(self) -> bool:
        return not self.violations

    @property
    def witness(self) -> tuple[str, int] | None:
        return self.violations[0] if self.violations else None


@dataclass(frozen=True)
class PatternVerdict:
    results: tuple[PropertyResult, ...]
    pattern: str = ""

    @property
    def unsat(self) -> bool:
        return any(not r.holds for r in self.results)

    @property
    def per_property(self) -> dict[LtlProperty, PropertyResult]:
        return {r.prop: r for r in self.results}

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "unsat": self.unsat,
            "properties": [{
                "property": to_text(r.prop.formula),
                "symbolic": to_symbolic(r.prop.formula),
                "rule": r.prop.rule,
                "location": r.prop.location,
                "holds": r.holds,
                "traces": r.checked,
                "violations": len(r.violations),
                "witness": list(r.witness) if r.witness else None,
            } for r in self.results],
        }


@dataclass(frozen=True)
class GlobalVerdict:
    patterns: dict[str, PatternVerdict]

    @property
    def unsat(self) -> bool:
        return any(v.unsat for v in self.patterns.values())

    def to_dict(self) -> dict:
        return {"unsat": self.unsat, "patterns": [v.to_dict() for v in self.patterns.values()]}

    def to_text(self) -> str:
        lines = [f"Unsat(SP(T_f)) = {self.unsat}"]
        for name, v in self.patterns.items():
            lines += ["", f"{name}: Unsat = {v.unsat}"]
            for n, r in enumerate(v.results, 1):
                status = "holds" if r.holds else \
                    f"violated on {len(r.violations)}/{r.checked} trace(s), first at {r.witness[0]}:{r.witness[1]}"
                lines.append(f"  p{n} {to_symbolic(r.prop.formula)}  {status}")
        return "\n".join(lines) + "\n"


def verify_pattern(properties: Sequence[LtlProperty], traces: TraceSet | Mapping[str, Sequence[str]],
                   pattern: str = "", backend=None) -> PatternVerdict:
    """Check every property on every trace, after filtering the traces to the
    union alphabet of *properties*."""
    if not isinstance(traces, TraceSet):
        traces = TraceSet(dict(traces))
    if not traces.traces:
        warnings.warn(f"no trace to check{' for ' + pattern if pattern else ''}; "
                      "nothing can be violated", NoEvidenceWarning, stacklevel=2)
    sigma = frozenset().union(*(p.alphabet for p in properties)) if properties else frozenset()
    names = sorted(traces.traces)
    kept = [[i for i, e in enumerate(traces.traces[n]) if e in sigma] for n in names]
    filtered = [tuple(traces.traces[n][i] for i in idx) for n, idx in zip(names, kept)]
    results = []
    for prop in properties:
        outcome = check_many(prop.formula, filtered, backend) if filtered else []
        # witnesses are reported as positions of the unfiltered trace
        violations = tuple(sorted((n, idx[r.position - 1] + 1 if r.position <= len(idx) else r.position)
                                  for n, idx, r in zip(names, kept, outcome) if not r.holds))
        results.append(PropertyResult(prop, violations, len(filtered)))
    return PatternVerdict(tuple(results), pattern)


def verify_all(per_pattern: Mapping[str, Sequence[LtlProperty]], traces, backend=None) -> GlobalVerdict:
    if not per_pattern:
        warnings.warn("no security pattern to verify", NoEvidenceWarning, stacklevel=2)
    if not isinstance(traces, TraceSet):
        traces = TraceSet(dict(traces))
    return GlobalVerdict({name: verify_pattern(props, traces, name, backend)
                          for name, props in per_pattern.items()})


def pattern_properties(kb, patterns: Iterable[str], context_id: str) -> dict[str, list[LtlProperty]]:
    """P(sp) for each pattern, from the diagrams the knowledge base lists."""
    from secadt.diagram import diagram_properties

    out = {}
    for p in patterns:
        props = []
        for diagram in kb.diagrams_for(p, context_id):
            props.extend(diagram_properties(diagram))
        if not props:
            warnings.warn(f"pattern {p!r} has no sequence diagram for context {context_id!r}; "
                          "it cannot be verified", NoEvidenceWarning, stacklevel=2)
        out[p] = props
    return out
