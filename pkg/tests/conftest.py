import numpy as np
import pytest

from dnls import fixtures

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    """Print and keep one pass/fail line for an acceptance criterion."""
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def p3():
    return fixtures.p3()


@pytest.fixture(params=sorted(fixtures.SOLITON_FAMILIES))
def family(request):
    return request.param, fixtures.SOLITON_FAMILIES[request.param]()


def assert_close(a, b, tol, what=""):
    err = float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) if np.size(a) else 0.0
    assert err <= tol, f"{what} error {err:.3e} > {tol:.1e}"
