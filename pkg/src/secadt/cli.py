"""Command-line front end: one subcommand per pipeline step.

Exit status is 0 on success, 1 on a domain error (bad knowledge base,
unresolved alternative, malformed results...) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from secadt import __version__
from secadt.adterm import DEFAULT_MAX_SCENARIOS, extract_scenarios, iter_badsteps, to_adterm
from secadt.adtree import read_adtree, write_adtree
from secadt.errors import SecadtError, SecadtWarning
from secadt.kb import load_kb, validate
from secadt.ltl import to_symbolic, write_properties
from secadt.report import emit_report
from secadt.testgen import evaluate_security, generate_test_suite, ingest_verdicts
from secadt.treegen import (
    PatternChoice,
    alternative_groups,
    build_report,
    choose_patterns,
    expand,
    generate_attack_tree,
    read_choice,
    write_choice,
    write_tree_report,
)
from secadt.verify import pattern_properties, read_traces, verify_all


def bundled(*parts) -> Path:
    return Path(str(resources.files("secadt").joinpath("data", *parts)))


DEFAULT_KB = bundled("kb", "injection")


@dataclass
class PipelineConfig:
    kb: Path = DEFAULT_KB
    context: str = "web"
    out: Path = Path("out")
    max_scenarios: int = DEFAULT_MAX_SCENARIOS
    choices: Path | None = None
    results: Path | None = None
    traces: Path | None = None

    @classmethod
    def from_args(cls, args) -> PipelineConfig:
        cfg = cls()
        for name in ("kb", "out", "choices", "results", "traces"):
            value = getattr(args, name, None)
            if value is not None:
                setattr(cfg, name, Path(value))
        cfg.context = getattr(args, "context", None) or cfg.context
        cfg.max_scenarios = getattr(args, "max_scenarios", None) or cfg.max_scenarios
        return cfg


class UsageError(Exception):
    pass


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def _need(path: Path | None, flag: str) -> Path:
    if path is None:
        raise UsageError(f"this command needs {flag}")
    if not path.exists():
        raise UsageError(f"{flag} {path}: no such file or directory")
    return path


def _input(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{p}: no such file or directory")
    return p


def _tree_term(path: str):
    return to_adterm(read_adtree(_input(path)))


def _patterns_in_order(term) -> list[str]:
    out: dict[str, None] = {}
    for b in iter_badsteps(term):
        out.update(dict.fromkeys(b.patterns))
    return list(out)


# subcommands


def cmd_kb_validate(args, cfg, out):
    kb = load_kb(cfg.kb, check=False)
    violations = validate(kb)
    print(f"{len(violations)} violations", file=out)
    for v in violations:
        print(f"  {v}", file=out)
    return 0 if not violations else 1


def cmd_tree_generate(args, cfg, out):
    kb = load_kb(cfg.kb)
    tree = generate_attack_tree(kb, args.attack)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / f"{_slug(args.attack)}.xml"
    write_adtree(tree, path)
    print(f"wrote {path} ({len(tree)} nodes)", file=out)
    for g in alternative_groups(tree):
        print(f"  alternative {g.step} #{g.ordinal}: {' | '.join(g.members)}", file=out)
    return 0


def _prompt_choice(groups, existing: dict, ask, out) -> dict:
    selections = dict(existing)
    for g in groups:
        if g.key in selections:
            continue
        print(f"Step {g.step}, alternative #{g.ordinal}:", file=out)
        for n, member in enumerate(g.members, 1):
            print(f"  {n}) {member}", file=out)
        while True:
            answer = ask(f"choose 1-{len(g.members)}: ").strip()
            if answer.isdigit() and 1 <= int(answer) <= len(g.members):
                selections[g.key] = g.members[int(answer) - 1]
                break
            if answer in g.members:
                selections[g.key] = answer
                break
            print("  not a valid choice", file=out)
    return selections


def cmd_tree_choose(args, cfg, out):
    tree = read_adtree(_input(args.tree))
    kb = load_kb(cfg.kb)
    groups = alternative_groups(tree)
    choice_path = cfg.choices or cfg.out / "choices.csv"
    if cfg.choices is not None and cfg.choices.exists():
        choice = read_choice(cfg.choices)
    else:
        choice = PatternChoice(_prompt_choice(groups, {}, args.ask, out))
        choice_path.parent.mkdir(parents=True, exist_ok=True)
        write_choice(choice, choice_path)
        print(f"wrote {choice_path}", file=out)
    chosen = choose_patterns(tree, choice, kb)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / f"{Path(args.tree).stem}.chosen.xml"
    write_adtree(chosen, path)
    print(f"wrote {path}", file=out)
    return 0


def cmd_tree_expand(args, cfg, out):
    initial = read_adtree(_input(args.initial))
    kb = load_kb(cfg.kb)
    choice = read_choice(_need(cfg.choices, "--choices")) if cfg.choices else PatternChoice()
    tf = expand(initial, kb, choice)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "tf.xml"
    write_adtree(tf, path)
    report = build_report(tf, kb)
    text, table = write_tree_report(report, cfg.out)
    patterns = _patterns_in_order(to_adterm(tf))
    print(f"wrote {path} ({len(tf)} nodes)", file=out)
    print(f"patterns: {', '.join(patterns)}", file=out)
    print(f"wrote {text} and {table} ({len(report.entries)} entries)", file=out)
    return 0


def cmd_scenarios(args, cfg, out):
    term = _tree_term(args.tree)
    scenarios = extract_scenarios(term, cfg.max_scenarios)
    lines = [f"{len(scenarios)} scenario(s)"]
    lines += [f"s{n}: {s}" for n, s in enumerate(scenarios, 1)]
    print("\n".join(lines), file=out)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "scenarios.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_testgen(args, cfg, out):
    term = _tree_term(args.tree)
    kb = load_kb(cfg.kb)
    target = cfg.out / "tests"
    suite = generate_test_suite(term, kb, cfg.context, target, cfg.max_scenarios)
    print(f"{len(suite)} test case(s) in {len(suite.features)} feature file(s), "
          f"{len(suite.procedures)} procedure stub(s) under {target}", file=out)
    return 0


def _security(args, cfg):
    term = _tree_term(args.tree)
    kb = load_kb(cfg.kb)
    suite = generate_test_suite(term, kb, cfg.context, max_scenarios=cfg.max_scenarios)
    verdicts = ingest_verdicts(suite, _need(cfg.results, "--results"))
    return term, kb, evaluate_security(term, verdicts, cfg.max_scenarios)


def cmd_verdicts_ingest(args, cfg, out):
    _, _, report = _security(args, cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "security.txt").write_text(report.to_text(), encoding="utf-8")
    (cfg.out / "security.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(report.to_text(), end="", file=out)
    return 0


def cmd_ltl_gen(args, cfg, out):
    kb = load_kb(cfg.kb)
    props = pattern_properties(kb, [args.pattern], cfg.context)[args.pattern]
    target = cfg.out / "ltl" / f"{_slug(args.pattern)}.ltl"
    target.parent.mkdir(parents=True, exist_ok=True)
    write_properties(props, target)
    for n, p in enumerate(props, 1):
        print(f"p{n} [{p.rule}] {to_symbolic(p.formula)}", file=out)
    print(f"wrote {target} ({len(props)} properties)", file=out)
    return 0


def _verification(args, cfg, kb, term):
    patterns = args.pattern or _patterns_in_order(term)
    traces = read_traces(_need(cfg.traces, "--traces"))
    return verify_all(pattern_properties(kb, patterns, cfg.context), traces)


def cmd_verify(args, cfg, out):
    kb = load_kb(cfg.kb)
    term = _tree_term(args.tree) if args.tree else None
    if term is None and not args.pattern:
        raise UsageError("verify needs a final tree or at least one --pattern")
    verdict = _verification(args, cfg, kb, term)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "verification.txt").write_text(verdict.to_text(), encoding="utf-8")
    (cfg.out / "verification.json").write_text(json.dumps(verdict.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(verdict.to_text(), end="", file=out)
    return 0


def cmd_report(args, cfg, out):
    term, kb, security = _security(args, cfg)
    verdict = _verification(args, cfg, kb, term)
    combined = emit_report(security, verdict)
    combined.write(cfg.out)
    print(combined.to_text(), end="", file=out)
    return 0


# parser


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--kb", help="knowledge base directory (default: bundled injection base)")
    common.add_argument("--context", help="application context id (default: web)")
    common.add_argument("--out", help="output directory (default: ./out)")
    common.add_argument("--choices", help="pattern choice file")
    common.add_argument("--results", help="test results file")
    common.add_argument("--traces", help="trace log file or directory")
    common.add_argument("--max-scenarios", type=int, help="scenario ceiling (default: 10000)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="secadt", parents=[common],
                                     description="Attack-defense tree driven security testing "
                                                 "and security pattern verification.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def leaf(group, name, func, help_text):
        p = group.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    kb = sub.add_parser("kb", help="knowledge base commands").add_subparsers(dest="action", required=True)
    leaf(kb, "validate", cmd_kb_validate, "check the knowledge base integrity")

    tree = sub.add_parser("tree", help="attack tree commands").add_subparsers(dest="action", required=True)
    leaf(tree, "generate", cmd_tree_generate, "generate the tree of one attack").add_argument("attack")
    leaf(tree, "choose", cmd_tree_choose, "resolve alternative patterns of a tree").add_argument("tree")
    leaf(tree, "expand", cmd_tree_expand, "expand an initial tree into the final tree").add_argument("initial")

    leaf(sub, "scenarios", cmd_scenarios, "list the scenarios of a final tree").add_argument("tree")
    leaf(sub, "testgen", cmd_testgen, "generate Given/When/Then test stubs").add_argument("tree")

    verdicts = sub.add_parser("verdicts", help="verdict commands").add_subparsers(dest="action", required=True)
    leaf(verdicts, "ingest", cmd_verdicts_ingest, "read test results and compute verdicts").add_argument("tree")

    ltl = sub.add_parser("ltl", help="property commands").add_subparsers(dest="action", required=True)
    leaf(ltl, "gen", cmd_ltl_gen, "generate the LTL properties of a pattern").add_argument("pattern")

    v = leaf(sub, "verify", cmd_verify, "check pattern properties on traces")
    v.add_argument("tree", nargs="?")
    v.add_argument("--pattern", action="append", help="pattern to verify (repeatable)")

    r = leaf(sub, "report", cmd_report, "combined verdicts and recommendation")
    r.add_argument("tree")
    r.set_defaults(pattern=None)
    return parser


def main(argv=None, out=None, ask=input) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.ask = ask
    cfg = PipelineConfig.from_args(args)
    with warnings.catch_warnings():
        warnings.simplefilter("always", SecadtWarning)
        warnings.showwarning = lambda message, *rest, **kw: print(f"warning: {message}", file=sys.stderr)
        try:
            return args.func(args, cfg, out)
        except UsageError as exc:
            print(f"{parser.prog}: error: {exc}", file=sys.stderr)
            return 2
        except SecadtError as exc:
            print(f"{parser.prog}: {exc}", file=sys.stderr)
            return 1


if __name__ == "__main__":
    sys.exit(main())
