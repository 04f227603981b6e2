"""Bohr frequencies from a density record, on both sides of the mapping."""
import math

import numpy as np

from dilatlab import (
    GridSpec, Observable, PotentialSpec, PropagationPlan, SystemSpec, apply_dilatation, build_hamiltonian,
    derive_dilatation, eigensolve, extract_spectrum, initial_state, ion_trap_spec, match_peaks, propagate, record,
)

spec = SystemSpec(N=1, d=1, pair_coeff=0.0, potential=PotentialSpec.harmonic(1.0))
grid = GridSpec.uniform(1, 128, 10.0)
H = build_hamiltonian(spec, grid)
eig = eigensolve(H, 10)
print("levels", np.round(eig.values[:4], 10))

wf = initial_state("superposition", spec, grid, eig=eig, indices=[0, 1, 2])
plan = PropagationPlan.for_duration(200.0, 0.05, stride=1, method="dense-exponential")
traj = propagate(wf, H, plan)

sp = extract_spectrum(record(traj, Observable("density", (0.7,))))
print(f"resolution {sp.resolution:.4f}")
for p in sp.peaks:
    print(f"  peak at {p.omega:.4f}  power {p.amplitude:.3e}")
print("matched", match_peaks(sp, eig, sp.resolution).matched_fraction)

# the autocorrelation sees the levels themselves, not their differences
ac = extract_spectrum(record(traj, Observable("autocorrelation")))
print("autocorrelation lines", np.round(ac.peak_frequencies, 3))

# ion side: clock runs lambda times faster, probe point shrinks by exp(-r)
dmap = derive_dilatation(4.0)
sim_grid = grid.scaled(math.exp(-dmap.r))
H_s = build_hamiltonian(ion_trap_spec(spec, dmap), sim_grid)
plan_s = PropagationPlan(dt=plan.dt / dmap.lam, n_steps=plan.n_steps, stride=1, method="dense-exponential")
traj_s = propagate(apply_dilatation(wf, dmap.r, sim_grid), H_s, plan_s)
sp_s = extract_spectrum(record(traj_s, Observable("density", (0.7 / 4,))))
print("ion-side peaks", np.round(sp_s.peak_frequencies, 4), "ratio", sp_s.peak_frequencies / sp.peak_frequencies)
print("matched with scale 4:", match_peaks(sp_s, eig, sp.resolution, scale=dmap.lam).matched_fraction)
