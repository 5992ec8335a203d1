import numpy as np
import pytest

from poisson_gmi import _kernels

# (label, passed, detail) appended by test_acceptance.py
ACCEPTANCE_LINES = []

EPS_GRID_40 = np.geomspace(1e-2, 1e2, 40)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")


@pytest.fixture(params=["numpy", "numba"])
def kernel_path(request, monkeypatch):
    """Run a test under each kernel implementation."""
    if request.param == "numba":
        if not _kernels.USE_NUMBA:
            pytest.skip("numba unavailable or disabled")
    else:
        monkeypatch.setattr(_kernels, "USE_NUMBA", False)
    return request.param
