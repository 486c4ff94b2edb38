import pytest

from coincidence_lab.spwf import BoxEigenstate, LocalNode, LocalRegular

ACCEPTANCE_LINES = []


@pytest.fixture
def box_pair():
    """psi1 has a node at 0.5, psi2 does not; both are nonzero at 0.25."""
    return BoxEigenstate(2, 1.0), BoxEigenstate(1, 1.0)


@pytest.fixture
def node_pair():
    x0 = 0.2
    return LocalNode(1.3 - 0.4j, x0), LocalRegular(0.7 + 0.2j, 0.0, x0), x0


@pytest.fixture
def acceptance_report():
    def report(criterion, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
