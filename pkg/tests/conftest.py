import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from simplexnet.complex import Graph, build_complex  # noqa: E402

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def triangle():
    return build_complex(Graph(3, ((0, 1), (1, 2), (0, 2))), 2)


@pytest.fixture
def path3():
    return build_complex(Graph(3, ((0, 1), (1, 2))), 2)


def random_complex(rng, n_max=12, p=0.4, K=2, n_min=1):
    from oracles import random_graph

    n = int(rng.integers(n_min, n_max + 1))
    n, edges = random_graph(rng, n, p)
    return build_complex(Graph(n, tuple(edges)), K)


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
