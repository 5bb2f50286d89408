"""Ring and cross paths for two threads in a harmonic well.

Two rings of length beta, or one ring of length 2 beta made from two swapped
paths: Q2 = Q(beta)^2 +/- Q(2 beta). At high temperature the cross paths
matter; as beta grows Q(2 beta) / Q(beta)^2 -> 1 and the symmetric pair
density collapses onto the plain ring density, while the antisymmetric sum
vanishes because both threads would have to share the ground state.
"""

import numpy as np

from threadscf import make_grid
from threadscf.exchange import density_with_exchange, pair_partition, saturation_diagnostics
from threadscf.propagator import build_propagator, density_single
from threadscf.scf import PotentialSpec, external_potential

grid = make_grid("cartesian-1d", 20.0, 256)
w = external_potential(PotentialSpec("harmonic"), grid)

p = build_propagator(w, 1.0)
stats = pair_partition(p, 1)
print(f"beta = 1: Q = {stats.q:.6f}, Q(2beta) = {stats.q2beta:.6f}")
print(f"          Q2 symmetric {stats.q2_sym:.6f}, antisymmetric {stats.q2_anti:.6f}")
print(f"          pair-corrected n(0) = {density_with_exchange(p, 2, 1).at(0.0):.6f}")

print("\n  beta   Q(2b)/Q(b)^2   density dev   Q2_anti/Q^2")
for row in saturation_diagnostics(w, [0.5, 1, 2, 5, 10, 20]):
    print(f"{row.beta:6.1f}   {row.q_ratio:12.8f}   {row.density_ratio:11.2e}   {row.anti_fraction:11.2e}")

cold = build_propagator(w, 20.0)
gap = np.max(np.abs(density_with_exchange(cold, 2, 1).values - density_single(cold, 2).values))
print(f"\nbeta = 20: symmetric pair density vs ring density, max difference {gap:.1e}")
