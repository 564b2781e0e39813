import numpy as np
import pytest

from livewire_oct.config import default_config


@pytest.fixture
def config():
    return default_config()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    reports = []
    for key in ("passed", "failed", "error"):
        reports.extend(terminalreporter.stats.get(key, []))
    acceptance = [
        r for r in reports
        if getattr(r, "when", "call") == "call" and "test_acceptance.py" in r.nodeid
    ]
    if not acceptance:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for rep in sorted(acceptance, key=lambda r: r.nodeid):
        name = rep.nodeid.split("::")[-1]
        status = "PASS" if rep.passed else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
