"""Acceptance verdict reporting.

The acceptance tests each produce one ``ACCEPTANCE <tag>: PASS|FAIL``
line. Printing alone is not enough — pytest captures file descriptors,
so a passing test's output vanishes. The ``acceptance`` fixture both
prints the line (visible under ``-s``) and stashes it; the terminal
summary hook then replays every collected line after the test table,
where capture cannot eat it.
"""

import sys

import pytest

_LINES = pytest.StashKey()


@pytest.fixture
def acceptance(request):
    lines = request.config.stash.setdefault(_LINES, [])

    def report(tag, passed, detail):
        line = f"ACCEPTANCE {tag}: {'PASS' if passed else 'FAIL'} - {detail}"
        lines.append(line)
        print(line, file=sys.__stdout__, flush=True)
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
