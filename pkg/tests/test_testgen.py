import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
from conftest import SAMPLES
from secadt import gherkin
from secadt.adterm import BADStep, badsteps, conj, disj, seq, to_adterm
from secadt.errors import (
    MissingSectionError,
    MissingVerdictError,
    MissingVerdictWarning,
    ResultsFileError,
    UnknownCaseError,
    UnknownEntityError,
)
from secadt.testgen import (
    Verdict,
    evaluate_security,
    generate_test_suite,
    ingest_verdicts,
    read_results,
    recommend,
    recommendation_row,
    simulate,
    write_results,
)
from secadt.treegen import expand, read_choice

P, F, I = Verdict.PASS, Verdict.FAIL, Verdict.INCONCLUSIVE


@pytest.fixture(scope="module")
def tf(injection_kb, initial_tree):
    return expand(initial_tree, injection_kb, read_choice(SAMPLES / "choices.csv"))


@pytest.fixture(scope="module")
def suite(tf, injection_kb):
    return generate_test_suite(tf, injection_kb, "web")


def test_one_case_per_badstep(suite, tf):
    assert len(suite) == len(badsteps(to_adterm(tf))) == 13
    assert [ids for _, ids in suite.scenarios][3] == (
        "tc-CAPEC-244/1.1", "tc-CAPEC-244/2.1", "tc-CAPEC-244/3.1")


def test_capec_244_feature(suite):
    text = gherkin.emit(suite.features["CAPEC-244.feature"])
    lines = text.splitlines()
    assert lines[:2] == ["@capec244", "Feature: CAPEC-244: Cross-Site Scripting via Encoded URI Schemes"]
    assert "  #1. Explore" in lines
    assert "  Scenario: Step1.1 Survey the application" in lines
    assert "    When Try to Survey the application" in lines
    assert [ln.split()[0] for ln in lines if ln.startswith("    ") and not ln.lstrip().startswith("#")] \
        == ["Given", "When", "Then"] * 3


def test_sub_attack_cases_go_to_the_top_level_feature(suite):
    assert list(suite.features) == ["CAPEC-66.feature", "CAPEC-250.feature", "CAPEC-244.feature"]
    assert len(suite.features["CAPEC-250.feature"].scenarios) == 6


def test_single_badstep(minimal_kb):
    b = BADStep("survey", ("Intercepting Validator",))
    suite = generate_test_suite(b, minimal_kb, "web")
    (case,) = suite.cases.values()
    assert (case.id, case.attack, case.title) == ("tc-survey", "CAPEC-63", "Step1 Survey the application")
    assert case.procedures == ("proc-start", "proc-w-survey", "proc-t-survey")
    assert suite.scenarios[0][1] == ("tc-survey",)


def test_shared_badstep_is_one_case(minimal_kb):
    s, p, t = (BADStep(n, ("Intercepting Validator",)) for n in ("survey", "probe", "steal"))
    suite = generate_test_suite(disj(seq(s, p), seq(s, t)), minimal_kb, "web")
    assert list(suite.cases) == ["tc-survey", "tc-probe", "tc-steal"]
    assert [ids for _, ids in suite.scenarios] == [("tc-survey", "tc-probe"), ("tc-survey", "tc-steal")]


def test_unknown_step_and_context(minimal_kb):
    with pytest.raises(UnknownEntityError):
        generate_test_suite(BADStep("nope", ("X",)), minimal_kb, "web")
    with pytest.raises(MissingSectionError):
        generate_test_suite(BADStep("survey", ("X",)), minimal_kb, "mobile")


def test_write_suite(tmp_path, suite, injection_kb):
    generate_test_suite(suite.case_for("CAPEC-66/1.1").badstep, injection_kb, "web", out_dir=tmp_path)
    features = sorted(p.name for p in (tmp_path / "features").iterdir())
    assert features == ["CAPEC-66.feature"]
    assert (tmp_path / "cases.csv").read_text().splitlines()[0] == \
        "case-id,step-id,attack-id,patterns,feature,scenario"
    assert any((tmp_path / "procedures").iterdir())


# verdicts


def test_results_round_trip(tmp_path, suite):
    verdicts = simulate(suite, vulnerable={"CAPEC-66/1.1"}, crashing={"CAPEC-84/2.1"})
    write_results(verdicts, tmp_path / "r.csv")
    assert read_results(tmp_path / "r.csv") == verdicts
    assert verdicts["tc-CAPEC-66/1.1"] is P and verdicts["tc-CAPEC-84/2.1"] is I
    assert verdicts["tc-CAPEC-244/3.1"] is F


def test_empty_results_file_is_inconclusive(tmp_path, suite, tf):
    (tmp_path / "r.csv").write_text("")
    with pytest.warns(MissingVerdictWarning) as caught:
        verdicts = ingest_verdicts(suite, tmp_path / "r.csv")
    assert len(caught) == 13
    assert set(verdicts.values()) == {I}
    report = evaluate_security(tf, verdicts)
    assert report.inconclusive and not report.vulnerable


def test_bad_results(tmp_path, suite):
    with pytest.raises(UnknownCaseError, match="tc-x"):
        ingest_verdicts(suite, {"tc-x": P})
    (tmp_path / "a.csv").write_text("case-id,verdict\ntc-a,Maybe\n")
    with pytest.raises(ResultsFileError, match="row 2"):
        read_results(tmp_path / "a.csv")
    (tmp_path / "b.csv").write_text("case-id,verdict\ntc-a,Pass\ntc-a,Fail\n")
    with pytest.raises(ResultsFileError, match="twice"):
        read_results(tmp_path / "b.csv")
    with pytest.raises(ResultsFileError):
        read_results(tmp_path / "missing.csv")


def test_sample_results(suite, tf):
    report = evaluate_security(tf, ingest_verdicts(suite, SAMPLES / "results.csv"))
    assert (report.vulnerable, report.inconclusive) == (False, False)
    assert report.recommendation == "No issue detected"


def test_one_vulnerable_scenario(suite, tf):
    steps = {"CAPEC-83/1.1", "CAPEC-83/2.1", "CAPEC-83/3.1"}
    report = evaluate_security(tf, simulate(suite, vulnerable=steps))
    assert report.vulnerable
    assert [s.vulnerable for s in report.per_scenario] == [False, True, False, False]


def test_verdict_keys(minimal_kb):
    a, b = BADStep("survey", ("X",)), BADStep("probe", ("X",))
    term = conj(a, b)
    for verdicts in ({a: P, b: P}, {"survey": P, "probe": "Pass"}, {"tc-survey": P, "tc-probe": P}):
        assert evaluate_security(term, verdicts).vulnerable
    with pytest.raises(MissingVerdictError, match="probe"):
        evaluate_security(term, {a: P})


@pytest.mark.parametrize("verdicts, expected", [
    ((P, P), (True, False)),
    ((P, F), (False, False)),
    ((P, I), (False, True)),
    ((I, F), (False, True)),
])
def test_sequence_examples(verdicts, expected):
    a, b = gen.badstep("a"), gen.badstep("b")
    report = evaluate_security(seq(a, b), dict(zip((a, b), verdicts)))
    assert (report.vulnerable, report.inconclusive) == expected


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.data())
def test_more_passes_never_remove_vulnerability(seed, data):
    import random

    rng = random.Random(seed)
    t = gen.generated_term(rng, rng.randint(1, 5))
    term = gen.to_term(t)
    steps = sorted(b.step for b in badsteps(term))
    before = {s: data.draw(st.sampled_from((P, F, I))) for s in steps}
    flip = data.draw(st.sampled_from(steps))
    after = {**before, flip: P}
    if evaluate_security(term, before).vulnerable:
        assert evaluate_security(term, after).vulnerable


def test_recommendation_rows():
    rows = {flags: recommendation_row(*flags) for flags in itertools.product((False, True), repeat=3)}
    assert [rows[(v, u, False)] for v, u in ((0, 0), (1, 0), (0, 1), (1, 1))] == [1, 2, 3, 4]
    assert {rows[(v, u, True)] for v in (0, 1) for u in (0, 1)} == {5}
    assert recommend(False, False, False) == "No issue detected"


def test_report_views(suite, tf):
    report = evaluate_security(tf, simulate(suite, crashing={"CAPEC-66/3.1"}))
    d = report.to_dict()
    assert d["inconclusive"] and not d["vulnerable"]
    assert len(d["badsteps"]) == 13 and len(d["scenarios"]) == 4
    text = report.to_text()
    assert text.startswith("Vulnerable(T_f) = False\nInconclusive(T_f) = True\n")
    assert "scenario 1: CAPEC-66/1.1 -> CAPEC-66/2.1 -> CAPEC-66/2.2 -> CAPEC-66/3.1 [inconclusive]" in text
