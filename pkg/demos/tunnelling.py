"""Density inside a classically forbidden region.

A thread bound in a finite well (depth 1 Ha, half-width 1 bohr) spends part
of its contour outside. The log-density there falls linearly with slope
2 kappa, kappa = sqrt(2 m (V0 - |E|)), as for the bound orbital.
"""

import numpy as np
from scipy.optimize import brentq

from threadscf import make_grid
from threadscf.scf import PotentialSpec, SCFConfig, forbidden_region_decay, scf_solve

spec = PotentialSpec("finite-well", depth=1.0, half_width=1.0)
grid = make_grid("cartesian-1d", 20.0, 256, "dirichlet-zero")
state = scf_solve(SCFConfig(beta=40.0), spec, grid)

# even bound state: k tan(k a) = kappa, k^2 + kappa^2 = 2 m V0
kappa = brentq(lambda q: np.sqrt(2 - q * q) * np.tan(np.sqrt(2 - q * q)) - q, 1e-6, np.sqrt(2) - 1e-9)
rate = forbidden_region_decay(state.density, spec)
print(f"fitted decay {rate:.4f}, bound-state 2 kappa {2 * kappa:.4f} ({rate / (2 * kappa) - 1:+.2%})")
for xi in (1.5, 2.5, 3.5, 4.5):
    print(f"  n({xi}) = {state.density.at(xi):.3e}")
