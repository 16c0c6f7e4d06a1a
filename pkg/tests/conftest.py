import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "uncert",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("uncert")

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def qubit_state(p):
    return np.diag([p, 1.0 - p]).astype(complex)


def skew_closed_form(p, alpha):
    """I^alpha(sigma_x) for rho = diag(p, 1-p) under the trace: 1 - f(alpha)."""
    q = 1.0 - p
    return 1.0 - (p ** alpha * q ** (1 - alpha) + p ** (1 - alpha) * q ** alpha)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return request.config.stash[_ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
