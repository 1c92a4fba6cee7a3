import numpy as np
import pytest

from hdgam.spline_basis import expand_design, fit_basis


def make_design(n=60, p=4, order=4, num_basis=6, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, p))
    return X, expand_design(X, fit_basis(X, order, num_basis))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# (criterion, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE, key=lambda r: int(r[0].split()[1].rstrip(":").split("/")[0])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
