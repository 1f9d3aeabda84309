import contextlib
import time

import pytest

_LOG = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LOG] = []


@pytest.fixture
def criterion(request):
    """``with criterion(n, title) as note:`` logs one pass/fail line for an acceptance criterion."""
    log = request.config.stash[_LOG]

    @contextlib.contextmanager
    def run(number, title):
        details = []
        start = time.perf_counter()
        ok = False
        try:
            yield details.append
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            extra = "; ".join(details)
            line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({elapsed:.1f}s{'; ' + extra if extra else ''})"
            log.append((number, line))
            print(line)

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_LOG, [])
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(log):
        terminalreporter.write_line(line)
