import re
from functools import lru_cache

import pytest

from poemkit.study import load_config, run_study, solve_study


@lru_cache(maxsize=None)
def preset_results(name):
    """Reports of every variant of a bundled preset, keyed by label (None if no sweep)."""
    return {cfg.label: run_study(cfg, write=False) for cfg in load_config(name)}


@lru_cache(maxsize=None)
def preset_data(name):
    (cfg,) = load_config(name)
    return solve_study(cfg)


@pytest.fixture
def preset():
    return preset_results


_criteria = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        prev = _criteria.get(n, "PASS")
        _criteria[n] = "PASS" if prev == "PASS" and report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        terminalreporter.write_line(f"criterion {n:2d}: {_criteria[n]}")
