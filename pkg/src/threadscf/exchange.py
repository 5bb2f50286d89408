"""Pair statistics from ring and cross paths.

Two threads starting at ``r`` and ``r'`` either close on themselves (two
rings) or swap endpoints (cross paths). A pair of cross paths chains into a
single ring of twice the contour length, so every pair quantity follows from
``q(beta)`` and ``q(2 beta) = compose(q(beta), q(beta))``:

    Q2_sym  = Q(beta)**2 + Q(2 beta)
    Q2_anti = Q(beta)**2 - Q(2 beta)

Only pair terms are kept; three-body and higher permutations are not modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .domain import ScalarField, beta_from_temperature
from .errors import ConfigError, ZeroPartitionError
from .propagator import (
    Propagator,
    build_propagator,
    compose,
    log_partition_function,
)
from .scf import SCFConfig, scf_solve
from .spectral import Spectrum, reconstruct_propagator

def _check_sign(sign):
    if sign not in (1, -1):
        raise ConfigError(f"statistics sign must be +1 or -1, got {sign}")


@dataclass(frozen=True)
class PairStatistics:
    """Pair partition functions, stored as logarithms so low temperatures do not overflow."""

    beta: float
    sign: int
    log_q: float
    log_q2beta: float

    @property
    def q(self):
        return math.exp(self.log_q)

    @property
    def q2beta(self):
        return math.exp(self.log_q2beta)

    @property
    def q_squared(self):
        return math.exp(2 * self.log_q)

    @property
    def ratio(self):
        """``Q(2 beta) / Q(beta)**2``; tends to 1 as the pair terms saturate."""
        return math.exp(self.log_q2beta - 2 * self.log_q)

    @property
    def q2_sym(self):
        return self.q_squared + self.q2beta

    @property
    def q2_anti(self):
        return self.q_squared - self.q2beta

    @property
    def q2(self):
        """Pair partition function for this object's statistics sign."""
        return self.q2_sym if self.sign == 1 else self.q2_anti

    @property
    def anti_fraction(self):
        """``Q2_anti / Q(beta)**2``, zero when both threads must share one state."""
        return -math.expm1(self.log_q2beta - 2 * self.log_q)


def pair_partition(p: Propagator, sign: int = 1) -> PairStatistics:
    _check_sign(sign)
    p2 = compose(p, p)
    return PairStatistics(p.beta, sign, log_partition_function(p), log_partition_function(p2))


@dataclass(frozen=True, eq=False)
class PairDensity:
    grid: object
    values: np.ndarray = field(repr=False)  # n(r_a, r_b)
    sign: int = 1

    def total(self):
        wts = self.grid.weights
        return float(wts @ self.values @ wts)

    def marginal(self, n_particles):
        """Single-particle density ``2/(N-1) int n(r, r') dr'``."""
        return ScalarField(self.grid, 2 / (n_particles - 1) * (self.values @ self.grid.weights))


def _pair_denominator(p, p2, sign):
    """``Q**2 +/- Q(2beta)`` in units of ``exp(2*log_scale)`` of ``p``."""
    wts = p.grid.weights
    q1 = float(np.sum(wts * np.diagonal(p.kernel)))
    q2 = float(np.sum(wts * np.diagonal(p2.kernel))) * math.exp(p2.log_scale - 2 * p.log_scale)
    denom = q1**2 + sign * q2
    if denom <= 1e-14 * q1**2:
        raise ZeroPartitionError(
            "antisymmetric pair partition function has collapsed; no pair density")
    return q1, q2, denom


def pair_density(p: Propagator, sign: int, n_particles: int) -> PairDensity:
    """``k [q(r,r) q(r',r') +/- q(r,r') q(r',r)]`` normalized to ``N(N-1)/2`` pairs."""
    _check_sign(sign)
    if n_particles < 2:
        raise ConfigError("pair densities need at least two particles")
    p2 = compose(p, p)
    _, _, denom = _pair_denominator(p, p2, sign)
    k = n_particles * (n_particles - 1) / (2 * denom)
    d = np.diagonal(p.kernel)
    vals = k * (np.outer(d, d) + sign * p.kernel * p.kernel.T)
    return PairDensity(p.grid, vals, sign)


def density_with_exchange(p: Propagator, n_particles: int, sign: int = 1) -> ScalarField:
    """``N [q(r,r,beta) Q + / - q(r,r,2beta)] / [Q**2 +/- Q(2beta)]``."""
    _check_sign(sign)
    if n_particles < 2:
        raise ConfigError("pair-corrected densities need at least two particles")
    p2 = compose(p, p)
    q1, _, denom = _pair_denominator(p, p2, sign)
    d2 = np.diagonal(p2.kernel) * math.exp(p2.log_scale - 2 * p.log_scale)
    return ScalarField(p.grid, n_particles * (np.diagonal(p.kernel) * q1 + sign * d2) / denom)


@dataclass(frozen=True)
class SaturationRow:
    beta: float
    q_ratio: float        # Q(2beta) / Q(beta)**2
    density_ratio: float  # sup |q(r,r,2beta) / (q(r,r,beta) Q(beta)) - 1|
    anti_fraction: float


def saturation_diagnostics(system, betas, density_floor: float = 1e-8):
    """Approach of the pair terms to the ring limit along ``betas``.

    ``system`` is a field (propagators are built per beta) or a spectrum
    (kernels are reconstructed). The density ratio is taken where the ring
    density exceeds ``density_floor``.
    """
    betas = list(betas)
    if len(betas) < 2 or any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ConfigError("need at least two ascending beta values")
    rows = []
    for beta in betas:
        if isinstance(system, Spectrum):
            p = reconstruct_propagator(system, beta)
        else:
            p = build_propagator(system, beta)
        p2 = compose(p, p)
        stats = pair_partition(p, 1)
        wts = p.grid.weights
        d1 = np.diagonal(p.kernel)
        q1 = float(np.sum(wts * d1))
        d2 = np.diagonal(p2.kernel) * math.exp(p2.log_scale - 2 * p.log_scale)
        mask = d1 / q1 > density_floor
        dev = np.max(np.abs(d2[mask] / (d1[mask] * q1) - 1))
        rows.append(SaturationRow(beta, stats.ratio, float(dev), stats.anti_fraction))
    return rows


@dataclass(frozen=True)
class SweepRow:
    temperature: float
    beta: float
    ring_energy: float
    exchange_energy: float
    relative_change: float


def exchange_correction_sweep(cfg: SCFConfig, spec, grid, temperatures,
                              reference_energy: float = 0.0, sign: int = 1):
    """Binding-energy change when pair-corrected densities replace ring densities.

    For each temperature the ring state is converged, then re-converged with
    the pair-corrected density starting from it. Binding energies are total
    free energies measured from ``reference_energy`` (separated fragments).
    """
    if sign != 1:
        raise ZeroPartitionError("the sweep needs the symmetric pair sum; the "
                                 "antisymmetric one has no saturating reference")
    rows = []
    for temp in temperatures:
        beta = beta_from_temperature(temp)
        ring_cfg = replace(cfg, beta=beta, exchange_sign=None)
        ring = scf_solve(ring_cfg, spec, grid)
        ex = scf_solve(replace(ring_cfg, exchange_sign=sign), spec, grid, initial=ring.field)
        e_ring = ring.energy.total - reference_energy
        e_ex = ex.energy.total - reference_energy
        rows.append(SweepRow(temp, beta, e_ring, e_ex, abs(e_ex - e_ring) / abs(e_ring)))
    return rows
