"""The small Gherkin subset used for generated test stubs.

Accepted lines are ``@tag`` lines before the feature, ``Feature:``,
``Scenario:``, ``Given``, ``When``, ``Then`` and ``#`` comments; blank lines
are ignored. Comments attach to the element that follows them. The emitted
layout is canonical, so ``emit(parse(emit(f))) == emit(f)``.
"""

from __future__ import annotations

from dataclasses import dataclass

from secadt.errors import GherkinSyntaxError

KEYWORDS = ("Given", "When", "Then")


@dataclass(frozen=True)
class Step:
    keyword: str
    text: str
    comments: tuple[str, ...] = ()


@dataclass(frozen=True)
class Scenario:
    title: str
    steps: tuple[Step, ...]
    comments: tuple[str, ...] = ()


@dataclass(frozen=True)
class Feature:
    title: str
    scenarios: tuple[Scenario, ...] = ()
    tags: tuple[str, ...] = ()
    comments: tuple[str, ...] = ()
    trailing: tuple[str, ...] = ()


def _single_line(text, what):
    if "\n" in text or "\r" in text:
        raise GherkinSyntaxError(f"{what} must fit on one line: {text!r}")
    return text


def emit(feature: Feature) -> str:
    out = [f"#{c}" for c in feature.comments]
    if feature.tags:
        out.append(" ".join(f"@{t}" for t in feature.tags))
    out.append(f"Feature: {_single_line(feature.title, 'feature title')}")
    for sc in feature.scenarios:
        out.append("")
        out += [f"  #{_single_line(c, 'comment')}" for c in sc.comments]
        out.append(f"  Scenario: {_single_line(sc.title, 'scenario title')}")
        for st in sc.steps:
            if st.keyword not in KEYWORDS:
                raise GherkinSyntaxError(f"unsupported step keyword {st.keyword!r}")
            out += [f"    #{_single_line(c, 'comment')}" for c in st.comments]
            out.append(f"    {st.keyword} {_single_line(st.text, 'step text')}")
    if feature.trailing:
        out.append("")
        out += [f"#{c}" for c in feature.trailing]
    return "\n".join(out) + "\n"


def parse(text: str) -> Feature:
    title = None
    tags: list[str] = []
    head_comments: list[str] = []
    pending: list[str] = []
    scenarios: list[Scenario] = []
    current = None  # (title, comments, steps)

    def close():
        nonlocal current
        if current is not None:
            scenarios.append(Scenario(current[0], tuple(current[2]), tuple(current[1])))
            current = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            pending.append(line[1:])
            continue
        if line.startswith("@"):
            if title is not None:
                raise GherkinSyntaxError("tags are only allowed before the feature", lineno)
            bad = [t for t in line.split() if not t.startswith("@") or len(t) == 1]
            if bad:
                raise GherkinSyntaxError(f"malformed tag {bad[0]!r}", lineno)
            tags += [t[1:] for t in line.split()]
            continue
        keyword, _, rest = line.partition(":") if line.split(":", 1)[0] in ("Feature", "Scenario") \
            else line.partition(" ")
        rest = rest.strip()
        if keyword == "Feature":
            if title is not None:
                raise GherkinSyntaxError("only one feature per file", lineno)
            title = rest
            head_comments, pending = pending, []
        elif keyword == "Scenario":
            if title is None:
                raise GherkinSyntaxError("scenario before the feature line", lineno)
            close()
            current = (rest, tuple(pending), [])
            pending = []
        elif keyword in KEYWORDS:
            if current is None:
                raise GherkinSyntaxError(f"{keyword} step outside a scenario", lineno)
            if not rest:
                raise GherkinSyntaxError(f"{keyword} step without text", lineno)
            current[2].append(Step(keyword, rest, tuple(pending)))
            pending = []
        else:
            raise GherkinSyntaxError(f"unsupported line {line!r}", lineno)
    close()
    if title is None:
        raise GherkinSyntaxError("no Feature line")
    return Feature(title, tuple(scenarios), tuple(tags), tuple(head_comments), tuple(pending))


def read_feature(path) -> Feature:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
