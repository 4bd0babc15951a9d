import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

DATA = Path(__file__).parent / "data"

# property suites run at least a thousand generated cases each
settings.register_profile("suite", max_examples=1000, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "suite"))


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, after the normal report."""
    lines = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props and rep.when in ("call", "setup"):
                lines.append((props["criterion"], "PASS" if status == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {name}")
