import pytest

from secadt import gherkin
from secadt.errors import GherkinSyntaxError
from secadt.gherkin import Feature, Scenario, Step

TEXT = """\
# generated
@capec1 @smoke
Feature: CAPEC-1: access

  #1. Explore
  Scenario: Step1.1 look around
    Given a browser
    When it opens the page
    # note
    Then nothing breaks
"""


def test_parse_and_emit():
    f = gherkin.parse(TEXT)
    assert f.title == "CAPEC-1: access"
    assert f.tags == ("capec1", "smoke")
    assert f.comments == (" generated",)
    (sc,) = f.scenarios
    assert sc.comments == ("1. Explore",)
    assert [s.keyword for s in sc.steps] == ["Given", "When", "Then"]
    assert sc.steps[2].comments == (" note",)
    assert gherkin.emit(f) == TEXT


def test_blank_lines_and_indentation_are_free():
    messy = "Feature: x\n\n\n      Scenario: s\nGiven   a\n"
    f = gherkin.parse(messy)
    assert f == Feature("x", (Scenario("s", (Step("Given", "a"),)),))


def test_empty_feature():
    f = Feature("only a title")
    assert gherkin.parse(gherkin.emit(f)) == f


@pytest.mark.parametrize("text, line", [
    ("Feature: a\nFeature: b\n", 2),
    ("Scenario: s\n", 1),
    ("Feature: a\nGiven x\n", 2),
    ("Feature: a\n  Scenario: s\n    And more\n", 3),
    ("Feature: a\nScenario: s\nWhen\n", 3),
    ("Feature: a\n@late\n", 2),
    ("@ bad\nFeature: a\n", 1),
])
def test_syntax_errors_carry_the_line(text, line):
    with pytest.raises(GherkinSyntaxError) as info:
        gherkin.parse(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_missing_feature_line():
    with pytest.raises(GherkinSyntaxError, match="no Feature"):
        gherkin.parse("# nothing here\n")


def test_emit_rejects_what_cannot_be_parsed_back():
    with pytest.raises(GherkinSyntaxError, match="keyword"):
        gherkin.emit(Feature("f", (Scenario("s", (Step("And", "x"),)),)))
    with pytest.raises(GherkinSyntaxError, match="one line"):
        gherkin.emit(Feature("f", (Scenario("two\nlines", ()),)))


def test_read_feature(tmp_path):
    path = tmp_path / "a.feature"
    path.write_text(TEXT, encoding="utf-8")
    assert gherkin.read_feature(path) == gherkin.parse(TEXT)
