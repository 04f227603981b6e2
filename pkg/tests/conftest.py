import numpy as np
import pytest

from dilatlab import GridSpec, PotentialSpec, SystemSpec, build_hamiltonian, eigensolve

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def oscillator():
    """1D harmonic oscillator omega = 1 on n = 128, L = 10 with its 10 lowest eigenpairs."""
    grid = GridSpec.uniform(1, 128, 10.0)
    spec = SystemSpec(N=1, d=1, pair_coeff=0.0, potential=PotentialSpec.harmonic(1.0))
    H = build_hamiltonian(spec, grid)
    return spec, grid, H, eigensolve(H, 10)


@pytest.fixture(scope="session")
def pair_system():
    """Two soft-Coulomb particles in 1D, harmonic confinement, 32 x 32 grid."""
    spec = SystemSpec(N=2, d=1, pair_coeff=1.0, softening=1.0, potential=PotentialSpec.harmonic(0.5))
    grid = GridSpec.uniform(2, 32, 8.0)
    return spec, grid


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
