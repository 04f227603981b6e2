"""Statevector simulation of phase-estimation readout.

The system register is kept in the eigenbasis of the simulator
Hamiltonian, where the controlled powers of U(t) = exp(-i H_s t) act as
diagonal phases. With U|v> = exp(2 pi i phi_v)|v>,

    phi_v = (-E_v * t / (2 pi)) mod 1.

Ancilla qubit j (1-based) controls U^(2^(j-1)) and carries bit j-1 of the
register index, so after the controlled stage the register holds
sum_b exp(2 pi i b phi) |b> / 2^(n/2) per component; the inverse QFT then
concentrates it near M = 2^n phi. The semiclassical (measure and
feed-forward) inverse QFT gives the same statistics and is not modeled
separately.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .evolve import EigenSolution
from .export import dump_json
from .mapping import DilatationMap
from .model import WaveFunction

__all__ = [
    "QpeConfig",
    "QpeResult",
    "iqft",
    "qft",
    "eigenphases",
    "qpe_distribution",
    "qpe_run",
    "phases_to_energies",
    "sample",
    "write_qpe_json",
]

MAX_QUBITS = 16


def _check_pow2(a: np.ndarray) -> int:
    n = a.shape[0]
    if n < 1 or n & (n - 1):
        raise ValueError(f"register length {n} is not a power of two")
    return n


def iqft(amplitudes) -> np.ndarray:
    """Inverse QFT: |j> -> 2^(-n/2) sum_M exp(-2 pi i j M / 2^n) |M>.

    Acts along axis 0, so a (2^n, k) array transforms k registers at once.
    """
    a = np.asarray(amplitudes, dtype=complex)
    _check_pow2(a)
    return np.fft.fft(a, axis=0, norm="ortho")


def qft(amplitudes) -> np.ndarray:
    a = np.asarray(amplitudes, dtype=complex)
    _check_pow2(a)
    return np.fft.ifft(a, axis=0, norm="ortho")


def eigenphases(energies, t_sim: float) -> np.ndarray:
    return np.mod(-np.asarray(energies, dtype=float) * t_sim / (2 * np.pi), 1.0)


def qpe_distribution(phases: Sequence[float], weights: Sequence[float], n: int) -> np.ndarray:
    """P(M) for a register mixture with eigenphases ``phases`` and weights |c_v|^2.

    Runs the circuit gate by gate: Hadamards on every ancilla, controlled
    U^(2^(j-1)) for j = 1..n, inverse QFT, Born probabilities.
    """
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"ancilla count must be in [1, {MAX_QUBITS}], got {n}")
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    dim = 1 << n
    b = np.arange(dim)
    reg = np.zeros((dim, phases.size), dtype=complex)
    reg[0] = 1.0
    for q in range(n):
        lo = b[((b >> q) & 1) == 0]
        hi = lo | (1 << q)
        a0, a1 = reg[lo].copy(), reg[hi].copy()
        reg[lo] = (a0 + a1) / math.sqrt(2)
        reg[hi] = (a0 - a1) / math.sqrt(2)
    for j in range(1, n + 1):
        ctrl = (b >> (j - 1)) & 1
        kick = np.exp(2j * np.pi * phases * (1 << (j - 1)))
        reg[ctrl == 1] *= kick
    out = iqft(reg)
    probs = np.abs(out) ** 2 @ weights
    return probs


@dataclass
class QpeConfig:
    n: int
    t_sim: float
    target: Union[WaveFunction, int]
    eig: EigenSolution
    completeness_tol: float = 1e-8

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"ancilla count must be in [1, {MAX_QUBITS}], got {self.n}")
        if not self.t_sim > 0:
            raise ValueError("t_sim must be > 0")


@dataclass
class QpeResult:
    n: int
    t_sim: float
    distribution: np.ndarray
    component_phases: np.ndarray
    component_weights: np.ndarray
    component_energies: np.ndarray

    @property
    def M_star(self) -> int:
        return int(np.argmax(self.distribution))

    @property
    def phase(self) -> float:
        return self.M_star / (1 << self.n)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "t_tilde": self.t_sim,
            "distribution": self.distribution,
            "M_star": self.M_star,
            "phase": self.phase,
        }


def qpe_run(config: QpeConfig) -> QpeResult:
    eig = config.eig
    if isinstance(config.target, (int, np.integer)):
        i = int(config.target)
        if not 0 <= i < len(eig.values):
            raise IndexError(f"eigenstate index {i} outside the provided eigensystem")
        c = np.zeros(len(eig.values), dtype=complex)
        c[i] = 1.0
    else:
        wf = config.target.normalized()
        c = eig.coefficients(wf)
        missing = abs(1.0 - float(np.sum(np.abs(c) ** 2)))
        if missing > config.completeness_tol:
            raise ValueError(
                f"target is not spanned by the eigensystem (missing weight {missing:.3e})"
            )
    w = np.abs(c) ** 2
    keep = w > 1e-15
    w = w[keep] / w[keep].sum()
    E = eig.values[keep]
    phases = eigenphases(E, config.t_sim)
    dist = qpe_distribution(phases, w, config.n)
    return QpeResult(config.n, config.t_sim, dist, phases, w, E)


def _distribution_peaks(dist: np.ndarray, min_prob: float) -> List[int]:
    left = np.roll(dist, 1)
    right = np.roll(dist, -1)
    return [int(m) for m in np.flatnonzero((dist >= left) & (dist > right) & (dist >= min_prob))]


def phases_to_energies(
    result: QpeResult,
    t_sim: float,
    dmap: Optional[DilatationMap] = None,
    min_prob: float = 0.05,
    energy_floor: float = 0.0,
    e_max: Optional[float] = None,
) -> np.ndarray:
    """Electron-gas energies read off the peaks of a QPE distribution.

    Simulator energies are taken from the branch
    [energy_floor, energy_floor + 2 pi / t_sim) and divided by lam.
    A warning lists the alternative branches if the simulator energies
    (``e_max``, or the largest component energy) reach 2 pi / t_sim.
    """
    period = 2 * np.pi / t_sim
    if e_max is None and result.component_energies.size:
        e_max = float(np.max(np.abs(result.component_energies)))
    lam = dmap.lam if dmap is not None else 1.0
    energies = []
    for M in _distribution_peaks(result.distribution, min_prob):
        phi = M / (1 << result.n)
        e_s = (-2 * np.pi * phi / t_sim - energy_floor) % period + energy_floor
        energies.append(e_s / lam)
    if e_max is not None and e_max * t_sim >= 2 * np.pi:
        branches = {f"{e:.6g}": [float((e * lam + k * period) / lam) for k in (-1, 1)] for e in energies}
        warnings.warn(
            f"phase aliasing: E_max*t = {e_max * t_sim:.3g} >= 2 pi; candidate branches {branches}",
            RuntimeWarning,
            stacklevel=2,
        )
    return np.sort(np.asarray(energies))


def sample(result: QpeResult, shots: int, seed: int) -> np.ndarray:
    """Measurement counts per M from ``shots`` repetitions."""
    rng = np.random.default_rng(seed)
    p = np.clip(result.distribution, 0, None)
    return rng.multinomial(shots, p / p.sum())


def write_qpe_json(path, result: QpeResult, energies=None) -> None:
    payload = result.as_dict()
    payload["energies"] = [] if energies is None else list(map(float, energies))
    with open(path, "w") as fh:
        fh.write(dump_json(payload))
