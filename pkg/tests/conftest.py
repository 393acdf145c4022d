import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


_CRITERIA = {}


@pytest.fixture
def note(request):
    """Attach a one-line measurement to an acceptance test."""
    def add(text):
        request.node.user_properties.append(("note", text))
    return add


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        notes = [v for k, v in report.user_properties if k == "note"]
        _CRITERIA[int(name.rsplit("_", 1)[-1])] = (report.outcome, "; ".join(notes))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        outcome, detail = _CRITERIA[n]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict}" + (f"  ({detail})" if detail else ""))
