"""How much faster does an ion crystal replay electron dynamics?"""
import numpy as np

from dilatlab import ION_MASS_RATIOS, derive_dilatation, map_for_species
from dilatlab.mapping import SI

for species in ION_MASS_RATIOS:
    m = map_for_species(species)
    print(f"{species:7s} mu={m.mass_ratio:>7.0f}  exp(r)={np.exp(m.r):>9.1f}  t_sim/t={m.time_factor:.3e}")

# doubly charged ions: lambda = Q^4 mu grows by 16
m2 = map_for_species("Ca40+", Q=2)
print("Ca, Q=2: lambda =", m2.lam, "=", 16 * map_for_species("Ca40+").lam)

# 0.1 s of electron-gas time in SI seconds, replayed on the ion side
ca = map_for_species("Ca40+")
t_au = SI.to_atomic(0.1, "time")
print(f"0.1 s electron time -> {SI.from_atomic(t_au / ca.lam, 'time'):.3e} s in the trap")

# the synthetic ratio used in the desk-scale checks
print(derive_dilatation(4.0).as_dict())
