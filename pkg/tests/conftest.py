import copy

import pytest

from probmax.harness.config import parse_config

# small budgets so harness plumbing tests stay fast
SMALL = {
    "problem": "example1",
    "schedules": [
        {"scheme": "ac_vssa", "a": 5, "budget": 2000},
        {"scheme": "msa", "budget": 2000},
    ],
    "replications": 3,
    "base_seed": 7,
    "reference": {"batch": 20000, "max_steps": 40, "eval_samples": 100000},
    "metric_samples": 50000,
    "lipschitz_pairs": 40,
    "lipschitz_batch": 2000,
    "gate_samples": 20000,
}


@pytest.fixture
def small_dict():
    return copy.deepcopy(SMALL)


@pytest.fixture
def small_config(small_dict):
    return parse_config(small_dict)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
