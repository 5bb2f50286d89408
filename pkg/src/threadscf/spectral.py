"""Kohn-Sham eigen-route: eigenpairs of ``-(1/2m) Laplacian + w``.

Energies are reported with the usual sign, so bound states in an attractive
field are negative. The thermal kernel is the eigen-sum

    q(r0, r, beta) = sum_i phi_i(r0) phi_i(r) exp(-beta eps_i)

and is an independent check on the contour-stepped propagator. Both routes
share the same spectral kinetic operator, so they differ only by splitting
error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from . import _modes
from .domain import ScalarField
from .errors import ConfigError, ConvergenceError, TruncationError
from .propagator import Propagator, _renormalized

DEFAULT_STATES = 40
TRUNCATION_TOL = 1e-10
# above this size the dense eigensolver gives way to ARPACK
DENSE_LIMIT = 2048


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: object
    energies: np.ndarray
    states: np.ndarray = field(repr=False)  # (k, *grid.shape), orthonormal under quadrature
    mass: float = 1.0

    @property
    def k(self) -> int:
        return len(self.energies)

    def state(self, i) -> ScalarField:
        return ScalarField(self.grid, self.states[i])

    def overlap(self) -> np.ndarray:
        flat = self.states.reshape(self.k, -1)
        return (flat * self.grid.weights.ravel()) @ flat.T


def hamiltonian_matrix(w: ScalarField, mass: float = 1.0) -> np.ndarray:
    """Dense symmetric Hamiltonian in the ``sqrt(weights)``-scaled basis."""
    return _modes.kinetic_matrix(w.grid, mass) + np.diag(w.values.ravel())


def solve_kohn_sham(w: ScalarField, k: int = DEFAULT_STATES, mass: float = 1.0) -> Spectrum:
    """Lowest ``k`` eigenpairs of the one-particle operator in the field ``w``."""
    grid = w.grid
    if not 1 <= k <= grid.size:
        raise ConfigError(f"cannot ask for {k} states on {grid.size} points")
    root = np.sqrt(grid.weights.ravel())
    try:
        if grid.size <= DENSE_LIMIT:
            h = hamiltonian_matrix(w, mass)
            energies, vecs = sla.eigh(h, subset_by_index=[0, k - 1])
        else:
            energies, vecs = _sparse_lowest(w, k, mass)
    except (sla.LinAlgError, spla.ArpackNoConvergence) as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    states = (vecs / root[:, None]).T.reshape((k,) + grid.shape)
    return Spectrum(grid, energies, states, mass)


def _sparse_lowest(w, k, mass):
    grid = w.grid
    wv = w.values

    def matvec(v):
        v = v.reshape(grid.shape)
        return (_modes.apply_kinetic(v, grid, mass, radial_scale=False) + wv * v).ravel()

    op = spla.LinearOperator((grid.size, grid.size), matvec=matvec, dtype=float)
    energies, vecs = spla.eigsh(op, k=k, which="SA", tol=1e-12)
    order = np.argsort(energies)
    return energies[order], vecs[:, order]


def reconstruct_propagator(spec: Spectrum, beta: float) -> Propagator:
    """Thermal kernel from the eigen-sum; the spectrum must be complete enough."""
    grid = spec.grid
    if grid.ndim != 1:
        raise ConfigError("dense propagators are limited to one-axis grids")
    if beta < 0:
        raise ConfigError("contour length must be nonnegative")
    eps = spec.energies
    if spec.k < grid.size and math.exp(-beta * (eps[-1] - eps[0])) > TRUNCATION_TOL:
        raise TruncationError(
            f"{spec.k} states leave a Boltzmann tail "
            f"{math.exp(-beta * (eps[-1] - eps[0])):.2e} at beta={beta}"
        )
    boltz = np.exp(-beta * (eps - eps[0]))
    phi = spec.states.reshape(spec.k, -1)
    kernel = (phi.T * boltz) @ phi
    kernel, log_scale = _renormalized(0.5 * (kernel + kernel.T), -beta * eps[0])
    return Propagator(grid, beta, kernel, log_scale, None, spec.mass)


def partition_sum(spec: Spectrum, beta: float) -> float:
    return float(np.sum(np.exp(-beta * spec.energies)))


def ground_state_density(spec: Spectrum, occupations) -> ScalarField:
    """Kohn-Sham density ``sum_i f_i |phi_i|^2``."""
    occ = np.asarray(list(occupations), dtype=float)
    if occ.size > spec.k or np.any(occ < 0):
        raise ConfigError(f"occupations {occ.tolist()} do not fit {spec.k} states")
    dens = np.tensordot(occ, spec.states[: occ.size] ** 2, axes=1) if occ.size else 0.0
    return ScalarField(spec.grid, np.zeros(spec.grid.shape) + dens)
