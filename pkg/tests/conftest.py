import numpy as np
import pytest

from bh_transport.lattice_model import ChainParams

TWO_PI = 2 * np.pi
GHZ = TWO_PI * 1e9
MHZ = TWO_PI * 1e6

# five-site chain fitted to the measured spectra
FIT_OMEGA = np.array([3.898, 3.898, 3.9, 3.901, 3.901]) * GHZ
FIT_ALPHA = np.array([-188.0, -178.0, -178.0, -178.0, -188.0]) * MHZ
FIT_J = 41.0 * MHZ
FIT_GAMMA = np.array([16.0, 6.0, 0.1, 3.0, 16.0]) * 1e6


@pytest.fixture
def fitted_params():
    return ChainParams(5, omega=FIT_OMEGA, alpha=FIT_ALPHA, J=FIT_J, gamma=FIT_GAMMA, omega_d=3.9 * GHZ)


@pytest.fixture
def small_params():
    """Three sites with generic parameters, cheap enough for dense oracles."""
    return ChainParams(3, omega=[1.0, 1.3, 0.8], alpha=[-2.0, -1.5, -2.5], J=0.7, Omega=0.4,
                       omega_d=1.1, gamma=[0.3, 0.05, 0.2], gamma_phi=[0.02, 0.0, 0.01])


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion and print it."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(number: int, ok: bool, detail: str, elapsed: float):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} ({elapsed:.1f} s)"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
