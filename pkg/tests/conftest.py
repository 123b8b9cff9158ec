import pytest

from quasipert.hilbert import build_basis

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def ho1d():
    return build_basis("HO1D", 1.0, 20)


@pytest.fixture(scope="session")
def ho2d():
    return build_basis("HO2D", 1.0, 10)


@pytest.fixture
def report():
    """Record a one-line acceptance verdict; lines are printed in the terminal summary."""
    def _report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
