import contextlib
import time

import numpy as np
import pytest

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("#")[1].split()[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion(request):
    """``with criterion(5, "title", budget_s): ...`` records one PASS/FAIL line.

    The block fails if it raises or if it overruns its time budget.
    """
    log = request.config.stash[ACCEPTANCE]

    @contextlib.contextmanager
    def record(number, title, budget):
        start = time.perf_counter()
        status, note = "FAIL", ""
        try:
            yield
            elapsed = time.perf_counter() - start
            if elapsed > budget:
                note = f" (over budget {budget:g} s)"
                raise AssertionError(f"criterion {number} took {elapsed:.1f} s, budget {budget:g} s")
            status = "PASS"
        finally:
            elapsed = time.perf_counter() - start
            line = f"[{status}] #{number} {title}  ({elapsed:.1f} s){note}"
            log.append(line)
            print(line)

    return record
