"""Time evolution and the propagator identity check.

Two propagators are available: Strang split-operator steps using FFTs, and
an exact dense exponential exp(-iHt) = V exp(-iEt) V^T from a full
eigendecomposition. The dense route is also the oracle for the split
route and the controlled-U engine for phase estimation.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import linalg

from .dilatation import apply_dilatation
from .mapping import DilatationMap
from .model import GridSpec, HamiltonianOperator, SystemSpec, WaveFunction, build_hamiltonian, ion_trap_spec

__all__ = [
    "EigenSolution",
    "eigensolve",
    "PropagationPlan",
    "Trajectory",
    "propagate",
    "PropagatorReport",
    "verify_propagator_identity",
    "write_trajectory_csv",
]


@dataclass
class EigenSolution:
    """Lowest eigenpairs; ``vectors[:, i]`` holds grid values normalized with dV."""

    values: np.ndarray
    vectors: np.ndarray
    grid: GridSpec
    residuals: np.ndarray

    def state(self, i: int) -> WaveFunction:
        return WaveFunction(self.grid, self.vectors[:, i])

    def coefficients(self, wf: WaveFunction) -> np.ndarray:
        """c_v = <v|psi>."""
        if wf.grid != self.grid:
            raise ValueError("wavefunction and eigenvectors live on different grids")
        psi = wf.psi.ravel()
        VT = self.vectors.conj().T
        if np.isrealobj(VT):
            return (VT @ np.ascontiguousarray(psi.real) + 1j * (VT @ np.ascontiguousarray(psi.imag))) * self.grid.dV
        return VT @ psi * self.grid.dV

    def bohr_frequencies(self) -> np.ndarray:
        E = self.values
        diffs = np.abs(E[:, None] - E[None, :])[np.triu_indices(len(E), k=1)]
        return np.sort(diffs)


def eigensolve(H: HamiltonianOperator, k: Optional[int] = None) -> EigenSolution:
    """k lowest eigenpairs of the dense Hamiltonian (all of them if k is None)."""
    A = H.dense()
    n = A.shape[0]
    if k is None or k >= n:
        E, V = linalg.eigh(A)
    else:
        if k < 1:
            raise ValueError("k must be >= 1")
        E, V = linalg.eigh(A, subset_by_index=[0, k - 1])
    res = np.linalg.norm(A @ V - V * E, axis=0)
    return EigenSolution(E, V / math.sqrt(H.grid.dV), H.grid, res)


def _full_eigen(H: HamiltonianOperator) -> EigenSolution:
    cached = getattr(H, "_eigen_full", None)
    if cached is None:
        cached = eigensolve(H)
        H._eigen_full = cached
    return cached


@dataclass(frozen=True)
class PropagationPlan:
    dt: float = 1e-3
    n_steps: int = 1000
    method: str = "split-operator"
    stride: int = 0
    keep_states: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        if self.method not in ("split-operator", "dense-exponential"):
            raise ValueError(f"unknown propagation method {self.method!r}")

    @classmethod
    def for_duration(cls, t: float, dt: float = 1e-3, **kw) -> "PropagationPlan":
        """Plan reaching exactly ``t``, with dt shrunk so that t/dt is an integer."""
        n = max(1, int(math.ceil(t / dt - 1e-9))) if t > 0 else 0
        return cls(dt=t / n if n else dt, n_steps=n, **kw)

    @property
    def duration(self) -> float:
        return self.dt * self.n_steps


@dataclass
class Trajectory:
    times: np.ndarray
    norms: np.ndarray
    energies: np.ndarray
    states: List[WaveFunction] = field(default_factory=list)
    observables: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def final(self) -> WaveFunction:
        if not self.states:
            raise ValueError("trajectory was run without keeping states")
        return self.states[-1]

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - self.norms[0])))

    @property
    def energy_drift(self) -> float:
        e0 = self.energies[0]
        return float(np.max(np.abs(self.energies - e0)) / max(abs(e0), 1e-300))


def check_plan(H: HamiltonianOperator, plan: PropagationPlan) -> None:
    if plan.method == "split-operator" and plan.dt * float(H.kinetic.max()) >= math.pi:
        raise ValueError(
            f"dt*max(T) = {plan.dt * float(H.kinetic.max()):.3g} >= pi; reduce dt or coarsen the grid"
        )


def propagate(
    psi0: WaveFunction,
    H: HamiltonianOperator,
    plan: PropagationPlan,
    observables: Optional[Dict[str, Callable[[WaveFunction], complex]]] = None,
) -> Trajectory:
    """Evolve psi0 under H; samples are taken every ``plan.stride`` steps.

    A stride of 0 records only the initial and final states.
    """
    if psi0.grid != H.grid:
        raise ValueError("initial state and Hamiltonian live on different grids")
    check_plan(H, plan)
    observables = observables or {}
    stride = plan.stride if plan.stride > 0 else max(plan.n_steps, 1)
    sample_steps = list(range(0, plan.n_steps + 1, stride))
    if sample_steps[-1] != plan.n_steps:
        sample_steps.append(plan.n_steps)

    times, norms, energies, states = [], [], [], []
    obs_vals: Dict[str, list] = {name: [] for name in observables}

    def record(step: int, wf: WaveFunction):
        times.append(step * plan.dt)
        norms.append(wf.norm())
        energies.append(H.energy(wf))
        if plan.keep_states:
            states.append(wf)
        for name, fn in observables.items():
            obs_vals[name].append(fn(wf))

    if plan.method == "dense-exponential":
        eig = _full_eigen(H)
        c = eig.coefficients(psi0)
        V = eig.vectors
        chunk = 256
        for start in range(0, len(sample_steps), chunk):
            steps = np.asarray(sample_steps[start:start + chunk])
            C = np.exp(-1j * np.outer(eig.values, steps * plan.dt)) * c[:, None]
            # V is real: two real products avoid upcasting it on every call
            block = V @ np.ascontiguousarray(C.real) + 1j * (V @ np.ascontiguousarray(C.imag))
            for j, step in enumerate(steps):
                record(int(step), WaveFunction(H.grid, block[:, j]))
    else:
        half_v = np.exp(-0.5j * plan.dt * H.potential)
        full_t = np.exp(-1j * plan.dt * H.kinetic)
        psi = psi0.psi.copy()
        step = 0
        for target in sample_steps:
            while step < target:
                psi = half_v * np.fft.ifftn(full_t * np.fft.fftn(half_v * psi))
                step += 1
            record(step, WaveFunction(H.grid, psi.copy()))

    return Trajectory(
        times=np.asarray(times),
        norms=np.asarray(norms),
        energies=np.asarray(energies),
        states=states,
        observables={k: np.asarray(v) for k, v in obs_vals.items()},
    )


@dataclass
class PropagatorReport:
    fidelity: float
    position_residual: float
    density_residual: float
    t: float
    t_sim: float
    electron_state: WaveFunction
    simulator_state: WaveFunction

    def as_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "infidelity": 1.0 - self.fidelity,
            "position_residual": self.position_residual,
            "density_residual": self.density_residual,
            "t": self.t,
            "t_sim": self.t_sim,
        }


def verify_propagator_identity(
    psi0: WaveFunction,
    t: float,
    eg_spec: SystemSpec,
    dmap: DilatationMap,
    method: str = "dense-exponential",
    dt: float = 1e-3,
    scale_potential: bool = True,
) -> PropagatorReport:
    """Compare exp(-i H_eg t) psi0 with S(-r) exp(-i H_s t/lam) S(r) psi0.

    The simulator lives on the commensurate grid (extents times exp(-r)),
    so both sides use the same number of points.
    """
    grid = psi0.grid
    H_eg = build_hamiltonian(eg_spec, grid)
    ion = ion_trap_spec(eg_spec, dmap, scale_potential=scale_potential)
    sim_grid = grid.scaled(math.exp(-dmap.r))
    H_s = build_hamiltonian(ion, sim_grid)
    t_sim = t / dmap.lam

    plan_eg = PropagationPlan.for_duration(t, dt, method=method)
    side_a = propagate(psi0, H_eg, plan_eg).final

    phi0 = apply_dilatation(psi0, dmap.r, sim_grid)
    plan_s = PropagationPlan(dt=plan_eg.dt / dmap.lam, n_steps=plan_eg.n_steps, method=method)
    phi_t = propagate(phi0, H_s, plan_s).final
    side_b = apply_dilatation(phi_t, -dmap.r, grid)

    fid = side_a.fidelity(side_b)
    pos_res = float(np.max(np.abs(side_a.expect_position() - side_b.expect_position())))
    dens_res = float(np.max(np.abs(side_a.density() - side_b.density())))
    return PropagatorReport(fid, pos_res, dens_res, t, t_sim, side_a, phi_t)


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """Columns: time, norm, energy, then one column per observable.

    Complex observables are split into ``name_re`` / ``name_im``.
    """
    cols = [("time", traj.times), ("norm", traj.norms), ("energy", traj.energies)]
    for name, vals in traj.observables.items():
        if np.iscomplexobj(vals):
            cols += [(f"{name}_re", vals.real), (f"{name}_im", vals.imag)]
        else:
            cols.append((name, vals))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([c[0] for c in cols])
        for row in zip(*[c[1] for c in cols]):
            w.writerow([f"{float(v):.17g}" for v in row])
