import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture(scope="session")
def bench_results():
    """Every benchmark instance at the mandatory scales, run once per session."""
    from explic.bench import run_suite

    return run_suite("all", max_bidders=4, max_players=4, timeout=300.0)


ACCEPTANCE = []


@pytest.fixture
def verdict_line():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(n, ok, detail, seconds):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({seconds:.1f}s) {detail}"
        ACCEPTANCE.append((n, line, seconds))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line, _ in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
