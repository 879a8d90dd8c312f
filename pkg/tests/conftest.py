import time

import pytest

ACCEPTANCE_LINES: list[str] = []


class Criterion:
    """Times one acceptance criterion and records a single PASS/FAIL line."""

    def __init__(self, number: int, title: str, limit_s: float):
        self.number, self.title, self.limit_s = number, title, limit_s
        self.failures: list[str] = []

    def check(self, ok: bool, message: str) -> None:
        if not ok:
            self.failures.append(message)

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self._t0
        if exc is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        if elapsed > self.limit_s:
            self.failures.append(f"runtime {elapsed:.1f}s exceeds {self.limit_s:.0f}s")
        status = "FAIL" if self.failures else "PASS"
        line = f"{status} criterion {self.number}: {self.title} ({elapsed:.1f}s, limit {self.limit_s:.0f}s)"
        if self.failures:
            line += " -- " + "; ".join(self.failures[:3])
        ACCEPTANCE_LINES.append(line)
        print(line)
        if exc is None:
            assert not self.failures, line
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
