import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "covgl", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("covgl")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_symmetric(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) * scale
    return 0.5 * (A + A.T)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    B = rng.standard_normal((n, rank))
    return B @ B.T / rank


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" in report.nodeid:
        if report.when == "call" or report.outcome != "passed":
            name = report.nodeid.split("::")[-1]
            _ACCEPTANCE[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        number, label = name[len("test_criterion_"):].split("_", 1)
        terminalreporter.write_line(f"criterion {int(number):2d} {label.replace('_', ' '):<36} {_ACCEPTANCE[name]}")


_ACCEPTANCE = {}
