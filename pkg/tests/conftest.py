import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """``report(number, name, passed, detail)`` prints one line and asserts ``passed``."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def report(number, name, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {name}  [{detail}]"
        lines.append(line)
        print(line)
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
