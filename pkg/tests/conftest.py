import re

import pytest

CRITERIA: dict[str, str] = {}


@pytest.fixture
def record():
    """Store a one-line PASS/FAIL verdict for an acceptance criterion."""

    def _record(name: str, ok: bool, detail: str = "") -> bool:
        CRITERIA[name] = f"{name}: {'PASS' if ok else 'FAIL'}" + (f"  ({detail})" if detail else "")
        print(CRITERIA[name])
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for name in sorted(CRITERIA, key=lambda k: (int(re.match(r"C(\d+)", k).group(1)), k)):
            terminalreporter.write_line(CRITERIA[name])
