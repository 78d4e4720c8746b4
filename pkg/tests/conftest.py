import json
import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from secadt import _backend  # noqa: E402
from secadt.adtree import read_adtree  # noqa: E402
from secadt.cli import bundled  # noqa: E402
from secadt.kb import load_kb  # noqa: E402

MINIMAL_KB = bundled("kb", "minimal")
INJECTION_KB = bundled("kb", "injection")
SAMPLES = bundled("samples")
INITIAL_TREE = bundled("trees", "injection.xml")


@pytest.fixture(scope="session")
def minimal_kb():
    return load_kb(MINIMAL_KB)


@pytest.fixture(scope="session")
def injection_kb():
    return load_kb(INJECTION_KB)


@pytest.fixture(scope="session")
def initial_tree():
    return read_adtree(INITIAL_TREE)


@pytest.fixture(scope="session")
def frozen():
    return json.loads((Path(__file__).parent / "oracle_values.json").read_text(encoding="utf-8"))


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param


# one summary line per acceptance criterion

_AC = re.compile(r"test_ac(\d+)_")
_outcomes: dict[int, list[tuple[str, str, float]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = _AC.match(item.name)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes.setdefault(int(m.group(1)), []).append((item.name, report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        runs = _outcomes[n]
        ok = all(outcome == "passed" for _, outcome, _ in runs)
        seconds = sum(d for _, _, d in runs)
        failed = [name for name, outcome, _ in runs if outcome != "passed"]
        line = f"AC{n}: {'PASS' if ok else 'FAIL'} ({len(runs)} test(s), {seconds:.2f}s)"
        if failed:
            line += f" failing: {', '.join(failed)}"
        terminalreporter.write_line(line)
