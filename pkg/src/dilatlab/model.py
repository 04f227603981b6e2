"""Discretized few-particle Hamiltonians on rectangular grids.

A configuration of ``N`` particles in ``d`` dimensions lives on an
``N*d``-dimensional grid whose axes are ordered particle-major: axis
``i*d + j`` is coordinate ``j`` of particle ``i``. Kinetic energy is
diagonal in the FFT wavenumber basis, the potential (soft-core pair terms
plus a one-body external potential) is diagonal on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import combinations
from typing import Optional, Sequence, Tuple

import numpy as np

from .mapping import DilatationMap, PotentialSpec, scale_external_potential

__all__ = [
    "DENSE_CAP",
    "GridSpec",
    "SystemSpec",
    "WaveFunction",
    "HamiltonianOperator",
    "soft_coulomb",
    "build_hamiltonian",
    "ion_trap_spec",
    "gaussian",
    "initial_state",
    "antisymmetrize",
]

DENSE_CAP = 4096


class DenseCapError(ValueError):
    pass


def soft_coulomb(separation, a: float = 0.5, c_pair: float = 1.0):
    """Soft-core Coulomb kernel c / sqrt(s**2 + a**2)."""
    if not a > 0:
        raise ValueError(f"softening a must be > 0, got {a!r}")
    s = np.asarray(separation, dtype=float)
    return c_pair / np.sqrt(s * s + a * a)


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid; axis k has ``n[k]`` points on [-L_k, L_k)."""

    n: Tuple[int, ...]
    L: Tuple[float, ...]

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        L = tuple(float(v) for v in np.atleast_1d(self.L))
        if len(L) == 1 and len(n) > 1:
            L = L * len(n)
        if len(n) != len(L):
            raise ValueError("n and L must have the same number of axes")
        for nk in n:
            if nk < 8 or nk & (nk - 1):
                raise ValueError(f"axis point count must be a power of two >= 8, got {nk}")
        for Lk in L:
            if not Lk > 0:
                raise ValueError(f"half-extent must be > 0, got {Lk}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", L)

    @classmethod
    def uniform(cls, ndim: int, n: int, L: float) -> "GridSpec":
        return cls((n,) * ndim, (L,) * ndim)

    @property
    def ndim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def dx(self) -> Tuple[float, ...]:
        return tuple(2.0 * Lk / nk for nk, Lk in zip(self.n, self.L))

    @property
    def dV(self) -> float:
        return float(np.prod(self.dx))

    def axis(self, k: int) -> np.ndarray:
        return -self.L[k] + self.dx[k] * np.arange(self.n[k])

    def wavenumbers(self, k: int) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n[k], d=self.dx[k])

    def mesh(self) -> list:
        return np.meshgrid(*[self.axis(k) for k in range(self.ndim)], indexing="ij", sparse=True)

    def kmesh(self) -> list:
        return np.meshgrid(*[self.wavenumbers(k) for k in range(self.ndim)], indexing="ij", sparse=True)

    def scaled(self, factor: float) -> "GridSpec":
        """Same point counts, extents multiplied by ``factor``."""
        return GridSpec(self.n, tuple(Lk * factor for Lk in self.L))

    def is_scaled_copy(self, other: "GridSpec", factor: float, rtol: float = 1e-12) -> bool:
        return self.n == other.n and all(
            math.isclose(Lo, Ls * factor, rel_tol=rtol) for Ls, Lo in zip(self.L, other.L)
        )

    def nearest_index(self, point: Sequence[float]) -> Tuple[int, ...]:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.size != self.ndim:
            raise ValueError(f"point has {point.size} coordinates, grid has {self.ndim} axes")
        idx = []
        for k, q in enumerate(point):
            if not -self.L[k] <= q <= self.L[k]:
                raise ValueError(f"point coordinate {q} outside grid axis {k} [-{self.L[k]}, {self.L[k]}]")
            idx.append(int(round((q + self.L[k]) / self.dx[k])) % self.n[k])
        return tuple(idx)


@dataclass(frozen=True)
class SystemSpec:
    """N particles of mass ``mass`` with pair kernel pair_coeff/sqrt(s^2+a^2).

    ``wall`` (optional hard-wall PotentialSpec) switches the boundary from
    periodic to a masked hard wall.
    """

    N: int = 1
    d: int = 1
    mass: float = 1.0
    pair_coeff: float = 1.0
    softening: float = 0.5
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    wall: Optional[PotentialSpec] = None

    def __post_init__(self):
        if self.N < 1 or self.d < 1:
            raise ValueError("N and d must be >= 1")
        if self.N * self.d > 4:
            raise ValueError(f"N*d = {self.N * self.d} exceeds the grid dimensionality cap of 4")
        if not self.mass > 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if self.pair_coeff < 0:
            raise ValueError(f"pair_coeff must be >= 0, got {self.pair_coeff}")
        if not self.softening > 0:
            raise ValueError(f"softening must be > 0, got {self.softening}")
        if self.wall is not None and self.wall.kind != "hard_wall":
            raise ValueError("wall must be a hard_wall PotentialSpec")

    @property
    def boundary(self) -> str:
        return "periodic" if self.wall is None else "hard_wall"

    @property
    def ndim(self) -> int:
        return self.N * self.d


def ion_trap_spec(eg: SystemSpec, dmap: DilatationMap, scale_potential: bool = True) -> SystemSpec:
    """Simulator counterpart of an electron-gas spec.

    Mass becomes mu * m, the pair coefficient picks up Q**2 and the
    softening shrinks by exp(-r) so the soft kernel transforms like the
    bare one. ``scale_potential=False`` leaves the external potential
    unscaled; it exists only as a negative control.
    """
    s = math.exp(dmap.r)
    pot = scale_external_potential(eg.potential, dmap) if scale_potential else eg.potential
    wall = scale_external_potential(eg.wall, dmap) if eg.wall is not None else None
    return replace(
        eg,
        mass=eg.mass * dmap.mass_ratio,
        pair_coeff=eg.pair_coeff * dmap.Q**2,
        softening=eg.softening / s,
        potential=pot,
        wall=wall,
    )


class WaveFunction:
    """Complex amplitudes on a GridSpec, normalized with quadrature weight dV."""

    def __init__(self, grid: GridSpec, psi: np.ndarray):
        psi = np.asarray(psi, dtype=complex)
        if psi.shape != grid.shape:
            psi = psi.reshape(grid.shape)
        self.grid = grid
        self.psi = psi

    def __repr__(self):
        return f"WaveFunction(grid={self.grid!r}, norm={self.norm():.12g})"

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.psi.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.psi) ** 2) * self.grid.dV))

    def normalized(self) -> "WaveFunction":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize a zero wavefunction")
        return WaveFunction(self.grid, self.psi / nrm)

    def inner(self, other: "WaveFunction") -> complex:
        """<self|other>."""
        if other.grid != self.grid:
            raise ValueError("wavefunctions live on different grids")
        return complex(np.vdot(self.psi, other.psi) * self.grid.dV)

    def fidelity(self, other: "WaveFunction") -> float:
        return abs(self.inner(other)) ** 2 / (self.norm() ** 2 * other.norm() ** 2)

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def _axis_marginal(self, k: int) -> np.ndarray:
        axes = tuple(i for i in range(self.grid.ndim) if i != k)
        return np.sum(self.density(), axis=axes) * self.grid.dV

    def expect_position(self) -> np.ndarray:
        """<q_k> for every axis."""
        n2 = self.norm() ** 2
        return np.array([self._axis_marginal(k) @ self.grid.axis(k) for k in range(self.grid.ndim)]) / n2

    def expect_position_sq(self) -> np.ndarray:
        n2 = self.norm() ** 2
        return np.array([self._axis_marginal(k) @ self.grid.axis(k) ** 2 for k in range(self.grid.ndim)]) / n2

    def _momentum_marginals(self):
        phi2 = np.abs(np.fft.fftn(self.psi)) ** 2
        total = phi2.sum()
        out = []
        for k in range(self.grid.ndim):
            axes = tuple(i for i in range(self.grid.ndim) if i != k)
            out.append(np.sum(phi2, axis=axes) / total)
        return out

    def expect_momentum(self) -> np.ndarray:
        marg = self._momentum_marginals()
        return np.array([m @ self.grid.wavenumbers(k) for k, m in enumerate(marg)])

    def expect_momentum_sq(self) -> np.ndarray:
        marg = self._momentum_marginals()
        return np.array([m @ self.grid.wavenumbers(k) ** 2 for k, m in enumerate(marg)])


class HamiltonianOperator:
    """H = sum_k p_k^2 / 2m + V(q) on a periodic grid.

    ``kinetic`` is the diagonal in FFT order, ``potential`` the diagonal on
    the grid. Both are real arrays of the grid shape.
    """

    def __init__(self, grid: GridSpec, mass: float, potential: np.ndarray, dense_cap: int = DENSE_CAP):
        self.grid = grid
        self.mass = float(mass)
        self.potential = np.asarray(potential, dtype=float)
        self.dense_cap = dense_cap
        km = grid.kmesh()
        kin = np.zeros(grid.shape)
        for k in km:
            kin = kin + k**2
        self.kinetic = kin / (2.0 * self.mass)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        psi = np.asarray(psi).reshape(self.grid.shape)
        return np.fft.ifftn(self.kinetic * np.fft.fftn(psi)) + self.potential * psi

    def energy(self, wf: WaveFunction) -> float:
        hpsi = self.apply(wf.psi)
        return float(np.real(np.vdot(wf.psi, hpsi)) / np.real(np.vdot(wf.psi, wf.psi)))

    def _axis_kinetic_matrix(self, k: int) -> np.ndarray:
        # circulant T_jl = c[(j - l) mod n], c = ifft(k^2 / 2m); symmetrized so T == T.T exactly
        kk = self.grid.wavenumbers(k)
        c = np.real(np.fft.ifft(kk**2 / (2.0 * self.mass)))
        c = 0.5 * (c + np.roll(c[::-1], 1))
        n = c.size
        idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
        return c[idx]

    @cached_property
    def _dense(self) -> np.ndarray:
        grid = self.grid
        H = np.diag(self.potential.ravel().astype(float))
        for k in range(grid.ndim):
            Tk = self._axis_kinetic_matrix(k)
            left = int(np.prod(grid.n[:k]))
            right = int(np.prod(grid.n[k + 1:]))
            H += np.kron(np.kron(np.eye(left), Tk), np.eye(right))
        return H

    def dense(self) -> np.ndarray:
        """Real symmetric matrix acting on point values (row-major ravel)."""
        if self.grid.size > self.dense_cap:
            raise DenseCapError(
                f"grid has {self.grid.size} points; dense realization capped at {self.dense_cap}"
            )
        return self._dense


def _potential_on_grid(spec: SystemSpec, grid: GridSpec) -> np.ndarray:
    mesh = [np.broadcast_to(m, grid.shape) for m in grid.mesh()]
    V = np.zeros(grid.shape)
    d = spec.d
    for i in range(spec.N):
        for j in range(d):
            V += spec.potential(mesh[i * d + j])
            if spec.wall is not None:
                V += spec.wall(mesh[i * d + j])
    if spec.pair_coeff > 0:
        for i, k in combinations(range(spec.N), 2):
            s2 = sum((mesh[i * d + j] - mesh[k * d + j]) ** 2 for j in range(d))
            V += soft_coulomb(np.sqrt(s2), spec.softening, spec.pair_coeff)
    return V


def build_hamiltonian(spec: SystemSpec, grid: GridSpec, dense_cap: int = DENSE_CAP) -> HamiltonianOperator:
    if spec.ndim != grid.ndim:
        raise ValueError(f"system has N*d = {spec.ndim} coordinates but grid has {grid.ndim} axes")
    return HamiltonianOperator(grid, spec.mass, _potential_on_grid(spec, grid), dense_cap=dense_cap)


def gaussian(grid: GridSpec, center=0.0, width=1.0, momentum=0.0) -> WaveFunction:
    """Normalized Gaussian packet; ``width`` is the rms width of |psi|^2 per axis."""
    nd = grid.ndim
    center = np.broadcast_to(np.asarray(center, dtype=float), (nd,))
    width = np.broadcast_to(np.asarray(width, dtype=float), (nd,))
    momentum = np.broadcast_to(np.asarray(momentum, dtype=float), (nd,))
    if np.any(width <= 0):
        raise ValueError("gaussian width must be > 0")
    for k in range(nd):
        if not -grid.L[k] <= center[k] < grid.L[k]:
            raise ValueError(f"gaussian center {center[k]} outside grid axis {k}")
    psi = np.ones(grid.shape, dtype=complex)
    for k, x in enumerate(grid.mesh()):
        psi = psi * np.exp(-((x - center[k]) ** 2) / (4.0 * width[k] ** 2) + 1j * momentum[k] * x)
    return WaveFunction(grid, psi).normalized()


def initial_state(kind: str, spec: SystemSpec, grid: GridSpec, eig=None, **params) -> WaveFunction:
    """Prepare a normalized state.

    kind = "gaussian" (center, width, momentum), "eigenstate" (index) or
    "superposition" (indices, weights). The last two use ``eig`` if given,
    otherwise diagonalize the Hamiltonian of ``spec`` on ``grid``.
    """
    if kind == "gaussian":
        return gaussian(grid, params.get("center", 0.0), params.get("width", 1.0), params.get("momentum", 0.0))
    if kind not in ("eigenstate", "superposition"):
        raise ValueError(f"unknown initial state kind {kind!r}")
    if kind == "eigenstate":
        indices = [int(params.get("index", 0))]
        weights = [1.0]
    else:
        indices = [int(i) for i in params["indices"]]
        weights = list(params.get("weights", [1.0] * len(indices)))
        if len(weights) != len(indices):
            raise ValueError("indices and weights differ in length")
    if eig is None:
        from .evolve import eigensolve

        eig = eigensolve(build_hamiltonian(spec, grid), max(indices) + 1)
    if max(indices) >= len(eig.values) or min(indices) < 0:
        raise IndexError(f"eigenstate index beyond computed spectrum of {len(eig.values)} states")
    psi = sum(w * eig.state(i).psi for i, w in zip(indices, weights))
    return WaveFunction(grid, psi).normalized()


def antisymmetrize(wf: WaveFunction, d: int = 1) -> WaveFunction:
    """Project a two-particle state onto its exchange-antisymmetric part."""
    if wf.grid.ndim != 2 * d:
        raise ValueError("antisymmetrize needs a two-particle grid")
    if wf.grid.n[:d] != wf.grid.n[d:] or wf.grid.L[:d] != wf.grid.L[d:]:
        raise ValueError("both particles must share identical axes")
    perm = tuple(range(d, 2 * d)) + tuple(range(d))
    return WaveFunction(wf.grid, 0.5 * (wf.psi - np.transpose(wf.psi, perm))).normalized()
