import pytest

_REPORT_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record ``(label, ok, detail)`` for the end-of-session acceptance summary."""
    lines = request.config.stash.setdefault(_REPORT_KEY, [])

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {label}" + (f": {detail}" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_REPORT_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
