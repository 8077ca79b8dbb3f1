import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from flagcalc.algebra import RandomSource

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def src():
    return RandomSource(20240611)


def assert_close(a, b, tol, rel=True):
    a, b = np.asarray(a), np.asarray(b)
    err = np.linalg.norm(a - b)
    bound = tol * (1.0 + np.linalg.norm(b)) if rel else tol
    assert err <= bound, f"residual {err:.3e} exceeds {bound:.3e}"


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, detail = RESULTS[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {detail}")
