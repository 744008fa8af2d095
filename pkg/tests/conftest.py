import numpy as np
import pytest

from limidcr.bench import RandomSpec, build_ebo, gen_random_diagram
from limidcr.model import DiagramBuilder, Strategy


def make_fig1():
    """Two decisions, each driving a chance node; both feed C3; three utilities."""
    b = DiagramBuilder()
    b.decision("D1")
    b.decision("D2")
    b.chance("C1", ["D1"], [[0.9, 0.1], [0.2, 0.8]])
    b.chance("C2", ["D2"], [[0.7, 0.3], [0.4, 0.6]])
    b.chance("C3", ["C1", "C2"], [[0.9, 0.1], [0.5, 0.5], [0.6, 0.4], [0.1, 0.9]])
    b.utility("U1", ["D1"], [0.0, -9.0])
    b.utility("U2", ["D2"], [0.0, -5.0])
    b.utility("U3", ["C3"], [0.0, 40.0])
    return b.build()


def make_trivial():
    b = DiagramBuilder()
    b.decision("D")
    b.utility("U", ["D"], [2.0, 5.0])
    return b.build()


def make_non_separable():
    """Coordination game: both decisions must switch together to reach the optimum."""
    b = DiagramBuilder()
    b.decision("A")
    b.decision("B")
    b.utility("U", ["A", "B"], [1.0, 0.0, 0.0, 2.0])
    return b.build()


def random_pure(diagram, rng):
    return Strategy.pure(diagram, {
        d: rng.integers(0, diagram.nodes[d].domain_size, size=diagram.n_configs(d)).tolist()
        for d in diagram.decisions
    })


def random_mixed(diagram, rng):
    tables = {}
    for d in diagram.decisions:
        k = diagram.nodes[d].domain_size
        tables[d] = rng.dirichlet(np.ones(k), size=diagram.n_configs(d))
    return Strategy.from_tables(tables)


def small_specs(count, seed0=100):
    """Desk-scale specs: at most 12 nodes and 4 binary decisions."""
    specs = []
    for i in range(count):
        total = 7 + i % 6
        decisions = 1 + i % 4
        specs.append(RandomSpec(total, decisions, max_parents=2 + i % 2, seed=seed0 + i))
    return specs


@pytest.fixture
def fig1():
    return make_fig1()


@pytest.fixture
def trivial():
    return make_trivial()


@pytest.fixture(scope="session")
def ebo():
    return build_ebo()


@pytest.fixture(scope="session")
def small_random():
    return [gen_random_diagram(s) for s in small_specs(12)]


# One line per acceptance criterion, printed after the test session.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    def _record(number, passed, detail):
        ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
        print(ACCEPTANCE_LINES[-1])
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
