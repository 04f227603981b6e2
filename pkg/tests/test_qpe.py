import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilatlab.evolve import eigensolve
from dilatlab.mapping import derive_dilatation
from dilatlab.model import (
    GridSpec,
    PotentialSpec,
    SystemSpec,
    WaveFunction,
    build_hamiltonian,
    gaussian,
    ion_trap_spec,
)
from dilatlab.qpe import (
    QpeConfig,
    QpeResult,
    eigenphases,
    iqft,
    phases_to_energies,
    qft,
    qpe_distribution,
    qpe_run,
    sample,
    write_qpe_json,
)


def kernel(delta, n):
    N = 1 << n
    s = np.sin(np.pi * delta)
    if abs(s) < 1e-14:
        return 1.0
    return (np.sin(N * np.pi * delta) / (N * s)) ** 2


def dft_inverse(n):
    N = 1 << n
    j, M = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    return np.exp(-2j * np.pi * j * M / N).T / math.sqrt(N)


@pytest.fixture(scope="module")
def sim_oscillator():
    """Harmonic oscillator in the mu=4 simulator frame: E_s = 4 (v + 1/2)."""
    dmap = derive_dilatation(4.0)
    pot = PotentialSpec.harmonic(1.0)
    eg = SystemSpec(N=1, d=1, mass=1.0, pair_coeff=0.0, potential=pot)

    grid = GridSpec.uniform(1, 128, 10.0).scaled(math.exp(-dmap.r))
    H = build_hamiltonian(ion_trap_spec(eg, dmap), grid)
    return dmap, eigensolve(H, 8), grid


def test_representable_phase_exact():
    p = qpe_distribution([0.625], [1.0], 3)
    assert p[5] == pytest.approx(1.0, abs=1e-12)
    assert np.delete(p, 5).max() < 1e-12


def test_non_representable_phase():
    p = qpe_distribution([0.3], [1.0], 4)
    assert int(np.argmax(p)) == 5
    assert np.sort(p)[-2:].sum() >= 8 / np.pi**2


def test_mixture_is_weighted_sum():
    p = qpe_distribution([0.25, 0.75], [0.5, 0.5], 3)
    assert p[2] == pytest.approx(0.5, abs=1e-12) and p[6] == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0, exclude_max=True), st.integers(1, 9))
def test_fejer_kernel(phi, n):
    p = qpe_distribution([phi], [1.0], n)
    N = 1 << n
    expected = [kernel(phi - M / N, n) for M in range(N)]
    np.testing.assert_allclose(p, expected, atol=1e-12)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_sweep_peak_probability():
    n = 8
    best = [qpe_distribution([phi], [1.0], n).max() for phi in np.linspace(0, 1, 1000, endpoint=False)]
    assert min(best) >= 4 / np.pi**2


def test_linearity():
    a = qpe_distribution([0.1], [1.0], 5)
    b = qpe_distribution([0.7], [1.0], 5)
    mix = qpe_distribution([0.1, 0.7], [0.3, 0.7], 5)
    np.testing.assert_allclose(mix, 0.3 * a + 0.7 * b, atol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 6])
def test_iqft_matches_dft_matrix(n, rng):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    np.testing.assert_allclose(iqft(v), dft_inverse(n) @ v, atol=1e-12)
    np.testing.assert_allclose(qft(iqft(v)), v, atol=1e-12)
    U = dft_inverse(n)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(1 << n), atol=1e-12)


def test_iqft_uniform_and_ramp():
    N = 16
    out = iqft(np.ones(N) / 4)
    assert abs(out[0]) == pytest.approx(1.0) and np.abs(out[1:]).max() < 1e-12
    ramp = np.exp(2j * np.pi * np.arange(N) * 3 / N) / 4
    assert abs(iqft(ramp)[3]) == pytest.approx(1.0)


def test_iqft_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        iqft(np.ones(6))


def test_qubit_range():
    with pytest.raises(ValueError):
        qpe_distribution([0.1], [1.0], 0)
    with pytest.raises(ValueError):
        qpe_distribution([0.1], [1.0], 17)


def test_eigenphases():
    np.testing.assert_allclose(eigenphases([0.0, np.pi], 1.0), [0.0, 0.5])
    assert eigenphases([-np.pi / 2], 1.0)[0] == pytest.approx(0.25)


def test_ground_state_energy(sim_oscillator):
    dmap, eig, _ = sim_oscillator
    n, t_sim = 8, 0.1
    res = qpe_run(QpeConfig(n, t_sim, 0, eig))
    E = phases_to_energies(res, t_sim, dmap)
    assert len(E) == 1
    assert abs(E[0] - 0.5) <= 2 * np.pi / ((1 << n) * t_sim * dmap.lam)


def test_zero_energy_phase():

    res = QpeResult(4, 1.0, qpe_distribution([0.0], [1.0], 4), np.zeros(1), np.ones(1), np.zeros(1))
    assert res.M_star == 0 and res.phase == 0.0
    np.testing.assert_allclose(phases_to_energies(res, 1.0), [0.0])


def test_superposition_energies(sim_oscillator):
    dmap, eig, grid = sim_oscillator
    wf = (eig.state(0).psi + eig.state(1).psi) / math.sqrt(2)

    n, t_sim = 8, 0.5
    res = qpe_run(QpeConfig(n, t_sim, WaveFunction(grid, wf), eig))
    np.testing.assert_allclose(res.component_weights, [0.5, 0.5], atol=1e-12)
    E = phases_to_energies(res, t_sim, dmap)
    tol = 2 * np.pi / ((1 << n) * t_sim * dmap.lam)
    np.testing.assert_allclose(E, eig.values[:2] / dmap.lam, atol=tol)


def test_aliasing_warns(sim_oscillator):
    dmap, eig, _ = sim_oscillator
    t_sim = 2.0
    res = qpe_run(QpeConfig(6, t_sim, 3, eig))
    with pytest.warns(RuntimeWarning, match="aliasing"):
        phases_to_energies(res, t_sim, dmap)


def test_incomplete_target_rejected(sim_oscillator):
    dmap, eig, grid = sim_oscillator

    wf = gaussian(grid, 1.0, 0.05)
    with pytest.raises(ValueError, match="spanned"):
        qpe_run(QpeConfig(4, 0.1, wf, eig))
    with pytest.raises(IndexError):
        qpe_run(QpeConfig(4, 0.1, 99, eig))


def test_sampling_is_seeded():
    res_p = qpe_distribution([0.3], [1.0], 4)

    res = QpeResult(4, 1.0, res_p, np.array([0.3]), np.ones(1), np.zeros(1))
    a, b = sample(res, 1000, 7), sample(res, 1000, 7)
    assert np.array_equal(a, b) and a.sum() == 1000
    assert int(np.argmax(a)) == 5


def test_json_export(tmp_path, sim_oscillator):
    dmap, eig, _ = sim_oscillator
    res = qpe_run(QpeConfig(3, 0.1, 0, eig))

    for name in ("a.json", "b.json"):
        write_qpe_json(tmp_path / name, res, phases_to_energies(res, 0.1, dmap))
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    data = json.loads((tmp_path / "a.json").read_text())
    assert set(data) == {"n", "t_tilde", "distribution", "M_star", "phase", "energies"}
    assert len(data["distribution"]) == 8
