"""Test suite generation from the final tree, verdict ingestion and the
security-testing verdicts.

One test case is generated per distinct BADStep of the final term. Cases are
grouped into one Gherkin feature per top-level attack, in document order of
the steps. Verdicts come back through a results file (``case-id,verdict``)
and are folded over the scenarios of the term.
"""

from __future__ import annotations

import csv
import enum
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from secadt import gherkin
from secadt.adterm import (
    DEFAULT_MAX_SCENARIOS,
    BADStep,
    Scenario,
    Term,
    evaluate,
    extract_scenarios,
    iter_badsteps,
    to_adterm,
)
from secadt.adtree import ADTree
from secadt.errors import (
    MissingVerdictError,
    MissingVerdictWarning,
    ResultsFileError,
    UnknownCaseError,
    UnknownEntityError,
)
from secadt.kb import KnowledgeBase, Procedure

ASSERTION_NOTE = " the Then step reports Pass when the attack step succeeded"


class Verdict(enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TestCase:
    __test__ = False

    id: str
    badstep: BADStep
    attack: str
    title: str
    given: str
    when: str
    then: str
    procedures: tuple[str, str, str]

    @property
    def step(self) -> str:
        return self.badstep.step


@dataclass(frozen=True)
class TestSuite:
    __test__ = False

    cases: dict[str, TestCase]
    scenarios: tuple[tuple[Scenario, tuple[str, ...]], ...]
    features: dict[str, gherkin.Feature] = field(default_factory=dict)
    procedures: dict[str, Procedure] = field(default_factory=dict)

    def __len__(self):
        return len(self.cases)

    @property
    def scenario_index(self) -> dict[Scenario, tuple[str, ...]]:
        return dict(self.scenarios)

    def case_for(self, step_id: str) -> TestCase:
        return self.cases[case_id(step_id)]


def case_id(step_id: str) -> str:
    return f"tc-{step_id}"


def feature_filename(attack_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", attack_id) + ".feature"


def _tag(attack_id: str) -> str:
    return re.sub(r"[^a-z0-9]+", "", attack_id.lower()) or "attack"


def generate_test_suite(tf: Term | ADTree, kb: KnowledgeBase, context_id: str, out_dir=None,
                        max_scenarios: int = DEFAULT_MAX_SCENARIOS) -> TestSuite:
    """Build TS for *tf*; with *out_dir*, also write features and stubs there."""
    term = to_adterm(tf) if isinstance(tf, ADTree) else tf
    scenarios = extract_scenarios(term, max_scenarios)

    cases: dict[str, TestCase] = {}
    procedures: dict[str, Procedure] = {}
    for b in iter_badsteps(term):
        cid = case_id(b.step)
        if cid in cases:
            continue
        step = kb.steps.get(b.step)
        if step is None:
            raise UnknownEntityError(f"BADStep {b.step!r} is not an attack step of the knowledge base")
        gwt = kb.test_sections(b.step, context_id)
        for info in gwt:
            if info.procedure is not None:
                procedures.setdefault(info.procedure.id, info.procedure)
        cases[cid] = TestCase(
            cid, b, kb.top_attack(step.attack),
            f"Step{step.number} {step.name}" if step.number else step.name,
            gwt.given.section.title, gwt.when.section.title, gwt.then.section.title,
            tuple(info.section.procedure for info in gwt))

    index = tuple((s, tuple(dict.fromkeys(case_id(b.step) for b in s.steps))) for s in scenarios)
    features = _features(cases, kb)
    suite = TestSuite(cases, index, features, procedures)
    if out_dir is not None:
        write_suite(suite, out_dir)
    return suite


def _features(cases: Mapping[str, TestCase], kb: KnowledgeBase) -> dict[str, gherkin.Feature]:
    by_attack: dict[str, list[TestCase]] = {}
    for case in cases.values():
        by_attack.setdefault(case.attack, []).append(case)
    out = {}
    for attack_id, group in by_attack.items():
        scenarios, announced = [], set()
        for case in group:
            comments = ()
            parent = kb.steps[case.step].parent
            if parent and parent not in announced:
                announced.add(parent)
                p = kb.steps[parent]
                comments = (f"{p.number}. {p.name}" if p.number else p.name,)
            steps = (gherkin.Step("Given", case.given), gherkin.Step("When", case.when),
                     gherkin.Step("Then", case.then, (ASSERTION_NOTE,)))
            scenarios.append(gherkin.Scenario(case.title, steps, comments))
        name = kb.attacks[attack_id].name if attack_id in kb.attacks else ""
        title = f"{attack_id}: {name}" if name else attack_id
        out[feature_filename(attack_id)] = gherkin.Feature(title, tuple(scenarios), (_tag(attack_id),))
    return out


def procedure_stub(proc: Procedure) -> str:
    lines = [f"// procedure {proc.id}"]
    lines += [f"// {line}".rstrip() for line in proc.comment.splitlines()]
    if proc.snippet:
        lines += ["", proc.snippet]
    return "\n".join(lines) + "\n"


def write_suite(suite: TestSuite, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    (out_dir / "features").mkdir(parents=True, exist_ok=True)
    (out_dir / "procedures").mkdir(parents=True, exist_ok=True)
    written = []
    for name, feature in suite.features.items():
        path = out_dir / "features" / name
        path.write_text(gherkin.emit(feature), encoding="utf-8")
        written.append(path)
    for pid, proc in suite.procedures.items():
        path = out_dir / "procedures" / (re.sub(r"[^A-Za-z0-9_.-]+", "_", pid) + ".txt")
        path.write_text(procedure_stub(proc), encoding="utf-8")
        written.append(path)
    index = out_dir / "cases.csv"
    with open(index, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["case-id", "step-id", "attack-id", "patterns", "feature", "scenario"])
        for case in suite.cases.values():
            writer.writerow([case.id, case.step, case.attack, " & ".join(case.badstep.patterns),
                             feature_filename(case.attack), case.title])
    written.append(index)
    return written


# verdicts


def parse_verdict(text: str) -> Verdict:
    try:
        return Verdict(text.strip())
    except ValueError:
        raise ResultsFileError(f"unknown verdict {text!r}; expected Pass, Fail or Inconclusive") from None


def read_results(path) -> dict[str, Verdict]:
    out: dict[str, Verdict] = {}
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise ResultsFileError(f"cannot read results file {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return out
        if [h.strip() for h in header] != ["case-id", "verdict"]:
            raise ResultsFileError(f"{path}: header must be 'case-id,verdict'")
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != 2 or not row[0].strip():
                raise ResultsFileError(f"{path}, row {reader.line_num}: expected case-id,verdict")
            cid = row[0].strip()
            if cid in out:
                raise ResultsFileError(f"{path}, row {reader.line_num}: case {cid!r} listed twice")
            try:
                out[cid] = parse_verdict(row[1])
            except ResultsFileError as exc:
                raise ResultsFileError(f"{path}, row {reader.line_num}: {exc}") from None
    return out


def write_results(verdicts: Mapping[str, Verdict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["case-id", "verdict"])
        for cid, v in verdicts.items():
            writer.writerow([cid, v.value])


def ingest_verdicts(suite: TestSuite, results) -> dict[str, Verdict]:
    """Verdict per case; *results* is a results file path or a mapping.

    Cases the executor did not report are Inconclusive, with a warning each.
    """
    reported = dict(results) if isinstance(results, Mapping) else read_results(results)
    unknown = [cid for cid in reported if cid not in suite.cases]
    if unknown:
        raise UnknownCaseError(f"results name unknown test case(s): {', '.join(unknown)}")
    out = {}
    for cid in suite.cases:
        if cid in reported:
            out[cid] = reported[cid]
        else:
            warnings.warn(f"no verdict reported for {cid}; counted as Inconclusive",
                          MissingVerdictWarning, stacklevel=2)
            out[cid] = Verdict.INCONCLUSIVE
    return out


def step_verdicts(suite: TestSuite, verdicts: Mapping[str, Verdict]) -> dict[BADStep, Verdict]:
    return {case.badstep: verdicts[cid] for cid, case in suite.cases.items() if cid in verdicts}


def simulate(suite: TestSuite, vulnerable=(), crashing=()) -> dict[str, Verdict]:
    """Stand-in executor: steps in *vulnerable* Pass, in *crashing* are
    Inconclusive, all others Fail. Both sets hold step ids."""
    vulnerable, crashing = set(vulnerable), set(crashing)
    return {cid: Verdict.INCONCLUSIVE if c.step in crashing
            else Verdict.PASS if c.step in vulnerable else Verdict.FAIL
            for cid, c in suite.cases.items()}


# security verdicts


@dataclass(frozen=True)
class ScenarioVerdict:
    scenario: Scenario
    vulnerable: bool
    inconclusive: bool

    @property
    def steps(self) -> tuple[str, ...]:
        return tuple(b.step for b in self.scenario.steps)


@dataclass(frozen=True)
class SecurityReport:
    per_badstep: dict[BADStep, bool]
    per_scenario: tuple[ScenarioVerdict, ...]
    vulnerable: bool
    inconclusive: bool
    recommendation: str

    def to_dict(self) -> dict:
        return {
            "vulnerable": self.vulnerable,
            "inconclusive": self.inconclusive,
            "recommendation": self.recommendation,
            "badsteps": [{"step": b.step, "patterns": list(b.patterns), "vulnerable": v}
                         for b, v in self.per_badstep.items()],
            "scenarios": [{"steps": list(s.steps), "vulnerable": s.vulnerable,
                           "inconclusive": s.inconclusive} for s in self.per_scenario],
        }

    def to_text(self) -> str:
        lines = [f"Vulnerable(T_f) = {self.vulnerable}", f"Inconclusive(T_f) = {self.inconclusive}", ""]
        for n, s in enumerate(self.per_scenario, 1):
            flags = [name for name, on in (("vulnerable", s.vulnerable), ("inconclusive", s.inconclusive)) if on]
            lines.append(f"scenario {n}: {' -> '.join(s.steps)} [{', '.join(flags) or 'not vulnerable'}]")
        lines += ["", self.recommendation]
        return "\n".join(lines) + "\n"


def _lookup(verdicts, b: BADStep) -> Verdict:
    for key in (b, b.step, case_id(b.step)):
        try:
            v = verdicts[key]
        except (KeyError, TypeError):
            continue
        return v if isinstance(v, Verdict) else parse_verdict(str(v))
    raise MissingVerdictError(f"no verdict for BADStep {b.step!r}")


def evaluate_security(tf: Term | ADTree, verdicts: Mapping, max_scenarios: int = DEFAULT_MAX_SCENARIOS
                      ) -> SecurityReport:
    """Fold local verdicts over the scenarios of *tf*.

    *verdicts* may be keyed by BADStep, step id or case id. Vulnerable and
    Inconclusive are evaluated independently of each other.
    """
    term = to_adterm(tf) if isinstance(tf, ADTree) else tf
    local = {b: _lookup(verdicts, b) for b in dict.fromkeys(iter_badsteps(term))}
    sigma = {b: v is Verdict.PASS for b, v in local.items()}
    per_scenario = tuple(
        ScenarioVerdict(s, evaluate(s.term, sigma),
                        any(local[b] is Verdict.INCONCLUSIVE for b in s.steps))
        for s in extract_scenarios(term, max_scenarios))
    vulnerable = any(s.vulnerable for s in per_scenario)
    inconclusive = any(s.inconclusive for s in per_scenario)
    return SecurityReport(sigma, per_scenario, vulnerable, inconclusive,
                          recommend(vulnerable, False, inconclusive))


# recommendations

RECOMMENDATIONS = (
    # (vulnerable, unsat, inconclusive) -> corrective action; None matches both
    ((False, False, False), "No issue detected"),
    ((True, False, False), "At least one scenario is successfully applied on AUT. "
                           "Fix the pattern implementation. Or the chosen patterns are inconvenient."),
    ((False, True, False), "Some pattern behavioural properties do not hold. Check the pattern "
                           "implementations with the UML seq. diag. Or another pattern conceals "
                           "the behaviour of the former."),
    ((True, True, False), "The chosen security patterns are useless or incorrectly implemented. "
                          "Review the ADTree, fix AUT."),
    ((None, None, True), "The test case execution crashed or returned unexpected exceptions. "
                         "Check the Test architecture and the test case codes."),
)


def recommendation_row(vulnerable: bool, unsat: bool, inconclusive: bool) -> int:
    """1-based row of the recommendation matrix matching the three verdicts."""
    if inconclusive:
        return len(RECOMMENDATIONS)
    for n, ((v, u, _), _) in enumerate(RECOMMENDATIONS, 1):
        if v == bool(vulnerable) and u == bool(unsat):
            return n
    raise AssertionError("unreachable")


def recommend(vulnerable: bool, unsat: bool, inconclusive: bool) -> str:
    return RECOMMENDATIONS[recommendation_row(vulnerable, unsat, inconclusive) - 1][1]
