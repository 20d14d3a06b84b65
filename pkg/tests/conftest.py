import functools

import numpy as np
import pytest

from ama_mis.graphs import Graph, complete_graph, cycle_graph

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def k2():
    return complete_graph(2)


@pytest.fixture
def c5():
    return cycle_graph(5)


@pytest.fixture
def single():
    return Graph(1)


def dense_mixer_unitary(n, target, controls, beta, exact_phase=False):
    """Open-controlled Rx built from Kronecker products of projectors.

    Independent of the index-pair kernels: U = P0(controls) (x) Rx + (I - P0(controls)) (x) phase.
    Qubit v is bit v of the basis index, so qubit 0 is the rightmost kron factor.
    """
    eye = np.eye(2)
    p0 = np.diag([1.0, 0.0])
    rx = np.array([[np.cos(beta), -1j * np.sin(beta)], [-1j * np.sin(beta), np.cos(beta)]])

    def kron_all(factors):
        # factors indexed by qubit; highest qubit first in the product
        return functools.reduce(np.kron, [factors[q] for q in reversed(range(n))])

    proj = kron_all([p0 if q in controls else eye for q in range(n)])
    active = kron_all([rx if q == target else (p0 if q in controls else eye) for q in range(n)])
    blocked_phase = np.exp(-1j * beta) if exact_phase else 1.0
    return active + blocked_phase * (np.eye(1 << n) - proj)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
