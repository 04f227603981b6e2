"""Two soft-Coulomb particles: the ion-side spectrum is the electron spectrum times lambda."""
import math

import numpy as np

from dilatlab import GridSpec, PotentialSpec, SystemSpec, build_hamiltonian, derive_dilatation, eigensolve, ion_trap_spec

eg = SystemSpec(N=2, d=1, pair_coeff=1.0, softening=1.0, potential=PotentialSpec.harmonic(0.5))
grid = GridSpec.uniform(2, 32, 8.0)
dmap = derive_dilatation(4.0)

ion = ion_trap_spec(eg, dmap)
print("ion mass", ion.mass, " pair coeff", ion.pair_coeff, " softening", ion.softening)

# same point count, extents shrunk by exp(-r)
sim_grid = grid.scaled(math.exp(-dmap.r))
E_eg = eigensolve(build_hamiltonian(eg, grid), 6).values
E_s = eigensolve(build_hamiltonian(ion, sim_grid), 6).values
for a, b in zip(E_eg, E_s):
    print(f"{a:12.8f}  {b:12.8f}  ratio {b / a:.12f}")

# forgetting to rescale the trap breaks the identity
E_bad = eigensolve(build_hamiltonian(ion_trap_spec(eg, dmap, scale_potential=False), sim_grid), 6).values
print("unscaled trap, ratios:", np.round(E_bad / E_eg, 4))
