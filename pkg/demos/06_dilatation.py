"""S(r) as a grid relabeling, as an interpolation, and as a generator flow."""
import math

import numpy as np

from dilatlab import GridSpec, apply_dilatation, apply_dilatation_via_generator, gaussian
from dilatlab.dilatation import TruncationError, momentum_transform_check, position_transform_check

grid = GridSpec.uniform(1, 256, 16.0)
wf = gaussian(grid, center=1.5, width=0.8, momentum=0.7)
r = 0.6

# commensurate target: exact, just new axis labels and an amplitude factor
out = apply_dilatation(wf, r)
print("target half-extent", out.grid.L, " <q>", out.expect_position(), "expected", math.exp(-r) * wf.expect_position())
print("<p>", out.expect_momentum(), "expected", math.exp(r) * wf.expect_momentum())
print("moment residuals", position_transform_check(wf, r)["max_residual"], momentum_transform_check(wf, r)["max_residual"])

# same grid, two ways
fourier = apply_dilatation(wf, r, grid, interpolation="fourier")
cubic = apply_dilatation(wf, r, grid, interpolation="cubic")
flow = apply_dilatation_via_generator(wf, r)
print("1-F fourier vs generator", 1 - fourier.fidelity(flow))
print("1-F cubic   vs generator", 1 - cubic.fidelity(flow))

# S(-r) S(r) = 1
print("1-F round trip", 1 - apply_dilatation(out, -r, grid).fidelity(wf))

# stretching a wide packet pushes it off the box
try:
    apply_dilatation_via_generator(gaussian(grid, 4.0, 2.0), -1.0)
except TruncationError as exc:
    print("refused:", exc)
