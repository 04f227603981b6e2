import numpy as np
import pytest

from dilatlab.mapping import PotentialSpec, derive_dilatation
from dilatlab.model import (
    DenseCapError,
    GridSpec,
    SystemSpec,
    antisymmetrize,
    build_hamiltonian,
    gaussian,
    initial_state,
    ion_trap_spec,
    soft_coulomb,
)
from dilatlab.evolve import eigensolve


def test_soft_coulomb_values():
    assert soft_coulomb(0.0, 1.0, 1.0) == 1.0
    assert soft_coulomb(3.0, 4.0, 1.0) == pytest.approx(0.2, rel=1e-15)


def test_soft_coulomb_far_field():
    a = 0.5
    s = 10 * a
    # sqrt(s^2 + a^2) = s (1 + a^2 / 2 s^2 + ...) so the deficit is ~ a^2 / 2 s^2 = 0.5 %
    assert abs(soft_coulomb(s, a, 1.0) * s - 1.0) < 0.01
    assert abs(soft_coulomb(s, a, 1.0) * s - 1.0) == pytest.approx(a**2 / (2 * s**2), rel=0.02)


def test_soft_coulomb_requires_positive_softening():
    with pytest.raises(ValueError):
        soft_coulomb(1.0, 0.0)


@pytest.mark.parametrize("n", [6, 12, 100])
def test_grid_requires_power_of_two(n):
    with pytest.raises(ValueError):
        GridSpec((n,), (1.0,))


def test_grid_wavenumbers_cover_nyquist():
    g = GridSpec.uniform(1, 16, 4.0)
    k = g.wavenumbers(0)
    assert k.min() == pytest.approx(-np.pi / g.dx[0])
    assert k.max() < np.pi / g.dx[0]


def test_system_dimension_cap():
    with pytest.raises(ValueError):
        SystemSpec(N=3, d=2)


def test_oscillator_ground_state():
    grid = GridSpec.uniform(1, 256, 10.0)
    H = build_hamiltonian(SystemSpec(N=1, pair_coeff=0.0, potential=PotentialSpec.harmonic(1.0)), grid)
    assert eigensolve(H, 1).values[0] == pytest.approx(0.5, abs=1e-6)


def test_two_independent_oscillators():
    spec = SystemSpec(N=2, d=1, pair_coeff=0.0, potential=PotentialSpec.harmonic(1.0))
    H = build_hamiltonian(spec, GridSpec.uniform(2, 32, 6.0))
    assert eigensolve(H, 1).values[0] == pytest.approx(1.0, abs=1e-6)


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="axes"):
        build_hamiltonian(SystemSpec(N=2), GridSpec.uniform(1, 32, 5.0))


def test_dense_cap():
    H = build_hamiltonian(SystemSpec(N=2, pair_coeff=0.0), GridSpec.uniform(2, 128, 5.0))
    with pytest.raises(DenseCapError):
        H.dense()


def test_dense_is_hermitian(pair_system):
    spec, grid = pair_system
    A = build_hamiltonian(spec, grid).dense()
    assert np.max(np.abs(A - A.conj().T)) < 1e-12
    assert np.max(np.abs(np.linalg.eigvals(A).imag)) < 1e-10


def test_dense_matches_spectral_apply(pair_system, rng):
    spec, grid = pair_system
    H = build_hamiltonian(spec, grid)
    psi = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    np.testing.assert_allclose(H.dense() @ psi.ravel(), H.apply(psi).ravel(), atol=1e-10)


def test_kinetic_nonnegative(pair_system):
    spec, grid = pair_system
    assert build_hamiltonian(spec, grid).kinetic.min() >= 0


def test_exchange_symmetry(pair_system):
    spec, grid = pair_system
    A = build_hamiltonian(spec, grid).dense()
    n = grid.n[0]
    idx = np.arange(n * n).reshape(n, n)
    perm = idx.T.ravel()
    swapped = A[np.ix_(perm, perm)]
    assert np.max(np.abs(swapped - A)) < 1e-12


def test_potential_invariant_under_relabeling(pair_system):
    spec, grid = pair_system
    V = build_hamiltonian(spec, grid).potential
    np.testing.assert_array_equal(V, V.T)


def test_grid_refinement_monotone():
    spec = SystemSpec(N=1, pair_coeff=0.0, potential=PotentialSpec.harmonic(1.0))
    errors = []
    for n in (8, 16, 32):
        H = build_hamiltonian(spec, GridSpec.uniform(1, n, 6.0))
        errors.append(abs(eigensolve(H, 1).values[0] - 0.5))
    assert errors[0] > errors[1] > errors[2]


def test_gaussian_centered():
    wf = gaussian(GridSpec.uniform(1, 256, 10.0), 0.0, 1.0, 0.0)
    assert abs(wf.expect_position()[0]) < 1e-10
    assert wf.norm() == pytest.approx(1.0, abs=1e-12)


def test_gaussian_width_is_rms():
    wf = gaussian(GridSpec.uniform(1, 256, 12.0), 0.3, 0.8, 0.0)
    var = wf.expect_position_sq()[0] - wf.expect_position()[0] ** 2
    assert np.sqrt(var) == pytest.approx(0.8, rel=1e-10)


def test_gaussian_center_outside_grid():
    with pytest.raises(ValueError):
        gaussian(GridSpec.uniform(1, 32, 2.0), 5.0)


def test_eigenstate_energy(oscillator):
    spec, grid, H, eig = oscillator
    wf = initial_state("eigenstate", spec, grid, eig=eig, index=0)
    assert H.energy(wf) == pytest.approx(0.5, abs=1e-6)


def test_eigenstate_without_precomputed_spectrum():
    spec = SystemSpec(N=1, pair_coeff=0.0, potential=PotentialSpec.harmonic(1.0))
    grid = GridSpec.uniform(1, 64, 8.0)
    wf = initial_state("eigenstate", spec, grid, index=1)
    assert build_hamiltonian(spec, grid).energy(wf) == pytest.approx(1.5, abs=1e-6)


def test_superposition_norm(oscillator):
    spec, grid, _, eig = oscillator
    wf = initial_state("superposition", spec, grid, eig=eig, indices=[0, 1], weights=[2**-0.5, 2**-0.5])
    assert wf.norm() == pytest.approx(1.0, abs=1e-10)


def test_eigenstate_index_out_of_range(oscillator):
    spec, grid, _, eig = oscillator
    with pytest.raises(IndexError):
        initial_state("eigenstate", spec, grid, eig=eig, index=10)


def test_ion_trap_spec_fields():
    eg = SystemSpec(N=2, pair_coeff=1.0, softening=1.0, potential=PotentialSpec.harmonic(1.0))
    ion = ion_trap_spec(eg, derive_dilatation(10.0, 2.0))
    assert ion.mass == pytest.approx(10.0)
    assert ion.pair_coeff == pytest.approx(4.0)
    assert ion.softening == pytest.approx(1.0 / 40.0)


def test_antisymmetrize(pair_system):
    _, grid = pair_system
    wf = antisymmetrize(gaussian(grid, [1.0, -0.5], 0.7))
    np.testing.assert_allclose(wf.psi, -wf.psi.T, atol=1e-15)
    assert wf.norm() == pytest.approx(1.0)
