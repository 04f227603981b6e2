"""Phase estimation on the ion-side oscillator, read back as electron energies."""
import math

import numpy as np

from dilatlab import (
    GridSpec, PotentialSpec, QpeConfig, SystemSpec, apply_dilatation, build_hamiltonian, derive_dilatation,
    eigensolve, initial_state, ion_trap_spec, phases_to_energies, qpe_distribution, qpe_run,
)
from dilatlab.qpe import sample

# an exact phase lands on one outcome, an inexact one spreads out
print(np.round(qpe_distribution([0.625], [1.0], 3), 12))
p = qpe_distribution([0.3], [1.0], 4)
print("phi=0.3: M*", p.argmax(), " top two", np.sort(p)[-2:].sum().round(4), ">= 8/pi^2 =", round(8 / math.pi**2, 4))

spec = SystemSpec(N=1, d=1, pair_coeff=0.0, potential=PotentialSpec.harmonic(1.0))
grid = GridSpec.uniform(1, 128, 10.0)
dmap = derive_dilatation(4.0)
sim_grid = grid.scaled(math.exp(-dmap.r))
eig_s = eigensolve(build_hamiltonian(ion_trap_spec(spec, dmap), sim_grid), 10)

wf = initial_state("superposition", spec, grid, indices=[0, 1, 2])
target = apply_dilatation(wf, dmap.r, sim_grid)

for n in (4, 6, 8, 10):
    res = qpe_run(QpeConfig(n, 0.5, target, eig_s))
    E = phases_to_energies(res, 0.5, dmap)
    bound = 2 * math.pi / (2**n * 0.5 * dmap.lam)
    print(f"n={n:2d}  energies {np.round(E, 4)}  bound {bound:.4f}")

res = qpe_run(QpeConfig(8, 0.5, target, eig_s))
counts = sample(res, shots=300, seed=1)
print("300 shots, busiest outcomes:", {int(m): int(counts[m]) for m in np.argsort(counts)[-3:][::-1]})
