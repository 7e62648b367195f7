import functools

import pytest

from fracbackstep.harness import example_case, run_scenario

_ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def benchmark_run(example, case, c=None):
    """Full 20 s run of a benchmark case, cached for the whole session."""
    overrides = {} if c is None else {"c": c}
    return run_scenario(example_case(example, case, **overrides))


@pytest.fixture
def report_line():
    def emit(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
