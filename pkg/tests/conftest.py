import contextlib
import time

import pytest

_RESULTS = {}


class _Record:
    detail = ""


@pytest.fixture
def acceptance():
    """Context manager recording one acceptance check as a PASS/FAIL line."""

    @contextlib.contextmanager
    def check(number, title):
        rec = _Record()
        t0 = time.perf_counter()
        ok = False
        try:
            yield rec
            ok = True
        finally:
            secs = time.perf_counter() - t0
            line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({secs:.1f} s) {rec.detail}"
            _RESULTS[number] = line.rstrip()
            print(_RESULTS[number])

    return check


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(_RESULTS):
            terminalreporter.write_line(_RESULTS[number])
