"""Self-consistent field loop and the static scenarios built on it.

The field felt by one thread is the external potential plus the Hartree
potential of the other ``N - 1`` particles, i.e. of ``(N - 1)/N`` of the total
density, plus an optional Pauli term. Densities come from the ring weights of
the propagator (or the equivalent eigen-sum), mixed linearly until the
sup-norm change of the field drops below tolerance.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla

from . import spectral
from .domain import Grid, ScalarField, integrate
from .errors import ConfigError, DivergenceError, ZeroPartitionError
from .propagator import (
    ContourSchedule,
    build_propagator,
    compose,
    log_partition_function,
)

log = logging.getLogger(__name__)

POTENTIAL_KINDS = (
    "coulomb-radial",
    "soft-coulomb-1d",
    "box",
    "step-barrier",
    "harmonic",
    "finite-well",
    "tabulated",
)


@dataclass(frozen=True)
class PotentialSpec:
    """External potential. Parameters by kind:

    * ``coulomb-radial``: ``Z``
    * ``soft-coulomb-1d``: ``Z``, ``softening``
    * ``box``: none (zero inside the grid's dirichlet walls)
    * ``step-barrier``: ``height``, ``start``, ``end`` (``end=None`` runs to the edge)
    * ``harmonic``: ``omega``
    * ``finite-well``: ``depth``, ``half_width``
    * ``tabulated``: ``values``
    """

    kind: str
    Z: float = 1.0
    softening: float = 1.0
    height: float = 0.0
    start: float = 0.0
    end: float | None = None
    omega: float = 1.0
    depth: float = 0.0
    half_width: float = 1.0
    values: tuple | None = None

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ConfigError(f"unknown potential kind {self.kind!r}")
        if self.kind in ("coulomb-radial", "soft-coulomb-1d") and not self.Z > 0:
            raise ConfigError("nuclear charge Z must be positive")
        if self.kind == "soft-coulomb-1d" and not self.softening > 0:
            raise ConfigError("softening must be positive")
        if self.height < 0 or self.depth < 0:
            raise ConfigError("barrier height and well depth must be nonnegative")
        if self.kind == "finite-well" and not self.half_width > 0:
            raise ConfigError("well half-width must be positive")
        if self.kind == "tabulated" and self.values is None:
            raise ConfigError("tabulated potential needs values")


def _lo_hi(grid, axis=0):
    x = grid.axes[axis]
    h = grid.spacing[axis]
    return x[0] - h / 2, x[-1] + h / 2


def external_potential(spec: PotentialSpec, grid: Grid) -> ScalarField:
    """Tabulate ``spec`` on ``grid``. Coulomb cores are cut off at ``h/2``."""
    kind = spec.kind
    if kind == "coulomb-radial":
        if not grid.radial:
            raise ConfigError("coulomb-radial needs a radial-3d grid")
        r = np.maximum(grid.axes[0], grid.spacing[0] / 2)
        return ScalarField(grid, -spec.Z / r)
    if kind == "tabulated":
        return ScalarField(grid, np.asarray(spec.values, dtype=float))
    if grid.radial and kind not in ("box", "harmonic"):
        raise ConfigError(f"{kind} potential is defined on cartesian grids")
    coords = grid.coords
    if kind == "box":
        return ScalarField(grid, np.zeros(grid.shape))
    if kind == "harmonic":
        rsq = sum(c**2 for c in coords)
        return ScalarField(grid, 0.5 * spec.omega**2 * rsq)
    if kind == "soft-coulomb-1d":
        rsq = sum(c**2 for c in coords)
        return ScalarField(grid, -spec.Z / np.sqrt(rsq + spec.softening**2))
    x = coords[0]
    lo, hi = _lo_hi(grid)
    if kind == "step-barrier":
        end = hi if spec.end is None else spec.end
        if not (lo <= spec.start < end <= hi):
            raise ConfigError(f"barrier [{spec.start}, {end}] outside grid [{lo}, {hi}]")
        return ScalarField(grid, np.where((x > spec.start) & (x < end), spec.height, 0.0))
    # finite-well
    a = spec.half_width
    if not (lo < -a and a < hi):
        raise ConfigError(f"well of half-width {a} does not fit in [{lo}, {hi}]")
    return ScalarField(grid, np.where(np.abs(x) < a, -spec.depth, 0.0))


def hartree_potential(n: ScalarField, softening: float = 1.0) -> ScalarField:
    """Electrostatic potential of the density ``n``.

    Radial grids solve ``U'' = -4 pi r n`` for ``U = r v`` with ``U(0) = 0`` and
    ``U(R)`` equal to the enclosed charge; one-axis cartesian grids convolve with
    the soft kernel ``1/sqrt(x**2 + a**2)``.
    """
    grid = n.grid
    if np.any(n.values < 0):
        raise ValueError("negative density in Hartree potential")
    if grid.radial:
        return ScalarField(grid, _radial_hartree(grid, n.values))
    if grid.ndim != 1:
        raise ConfigError("Hartree potential is implemented for one-axis grids")
    x = grid.axes[0]
    kern = 1.0 / np.sqrt((x[:, None] - x[None, :]) ** 2 + softening**2)
    return ScalarField(grid, kern @ (grid.weights * n.values))


def _radial_hartree(grid, dens):
    # Numerov for U'' = f with f = -4 pi r n; f and U are odd about r = 0
    r = grid.axes[0]
    h = grid.spacing[0]
    npts = r.size
    charge = float(np.sum(grid.weights * dens))
    f = -4 * np.pi * r * dens
    rhs = 10 * f
    rhs[1:] += f[:-1]
    rhs[:-1] += f[1:]
    rhs[0] -= f[0]
    rhs *= h**2 / 12
    ab = np.zeros((3, npts))
    ab[0, 1:] = 1.0
    ab[1, :] = -2.0
    ab[2, :-1] = 1.0
    # U vanishes at the r = 0 face and equals the total charge at r = R
    ab[1, 0] = -3.0
    ab[1, -1] = -3.0
    rhs[-1] -= 2 * charge
    u = sla.solve_banded((1, 1), ab, rhs)
    return u / r


PauliHook = Callable[[ScalarField, Grid, float], ScalarField]

# excluded-volume fields plug in here; only the trivial one ships
PAULI_HOOKS: dict[str, PauliHook | None] = {"none": None}


@dataclass(frozen=True)
class SCFConfig:
    n_particles: float = 1
    beta: float = 40.0
    mixing: float = 0.2
    tolerance: float = 1e-8
    max_iterations: int = 500
    backend: str = "propagator"
    include_hartree: bool = True
    pauli: str = "none"
    softening: float = 1.0
    slices: int | None = None
    mass: float = 1.0
    # None: ring density N q/Q; +1/-1: pair-corrected density with that sign
    exchange_sign: int | None = None

    def __post_init__(self):
        if self.n_particles < 1:
            raise ConfigError("need at least one particle")
        if not 0 < self.mixing <= 1:
            raise ConfigError("mixing fraction must lie in (0, 1]")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ConfigError("need at least one iteration")
        if not self.beta > 0:
            raise ConfigError("beta must be positive")
        if self.backend not in ("propagator", "spectral"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.pauli not in PAULI_HOOKS:
            raise ConfigError(f"unknown Pauli hook {self.pauli!r}")
        if self.exchange_sign not in (None, 1, -1):
            raise ConfigError("exchange sign must be +1 or -1")
        if self.exchange_sign is not None and self.n_particles < 2:
            raise ConfigError("pair-corrected densities need at least two particles")


@dataclass(frozen=True)
class ThermalWeights:
    """Ring weights at ``beta`` (and ``2 beta`` when pair terms are wanted), scaled.

    True values are ``diag * exp(log_scale)`` and ``diag2 * exp(2 log_scale)``.
    """

    diag: np.ndarray
    log_scale: float
    diag2: np.ndarray | None = None

    def log_q(self, weights):
        return math.log(np.sum(weights * self.diag)) + self.log_scale

    def log_q2(self, weights):
        return math.log(np.sum(weights * self.diag2)) + 2 * self.log_scale


def thermal_weights(w: ScalarField, cfg: SCFConfig, pairs: bool = False) -> ThermalWeights:
    """Diagonal of the propagator at ``beta`` (and ``2 beta``) via the chosen backend."""
    if cfg.backend == "propagator":
        sched = (ContourSchedule(cfg.beta, cfg.slices) if cfg.slices
                 else ContourSchedule.for_field(w.values, cfg.beta))
        p = build_propagator(w, sched, cfg.mass)
        diag2 = None
        if pairs:
            p2 = compose(p, p)
            diag2 = np.diagonal(p2.kernel) * math.exp(p2.log_scale - 2 * p.log_scale)
        return ThermalWeights(p.scaled_diagonal(), p.log_scale, diag2)
    spec = spectral.solve_kohn_sham(w, w.grid.size, cfg.mass)
    eps = spec.energies - spec.energies[0]
    phi2 = spec.states.reshape(spec.k, -1) ** 2
    diag = (np.exp(-cfg.beta * eps) @ phi2).reshape(w.grid.shape)
    diag2 = (np.exp(-2 * cfg.beta * eps) @ phi2).reshape(w.grid.shape) if pairs else None
    return ThermalWeights(diag, -cfg.beta * spec.energies[0], diag2)


def density_from_weights(tw: ThermalWeights, grid: Grid, n_particles, sign=None):
    """Ring density, or the pair-corrected density when ``sign`` is given."""
    wts = grid.weights
    q1 = np.sum(wts * tw.diag)
    if sign is None:
        return n_particles * tw.diag / q1
    q2 = np.sum(wts * tw.diag2)
    denom = q1**2 + sign * q2
    if denom <= 1e-300 or denom <= 1e-14 * q1**2:
        raise ZeroPartitionError("pair partition function collapses; no pair-corrected density")
    return n_particles * (tw.diag * q1 + sign * tw.diag2) / denom


@dataclass(frozen=True, eq=False)
class FreeEnergy:
    """Free-energy breakdown in Hartree.

    ``conformational`` is the thread conformational free energy; ``translational``
    the remaining positional-entropy part of ``-(N/beta) ln Q - int w n``, so
    that ``total = conformational + translational + external + hartree``.
    """

    conformational: float
    translational: float
    external: float
    hartree: float
    total: float

    def as_dict(self):
        return {k: float(getattr(self, k)) for k in
                ("conformational", "translational", "external", "hartree", "total")}


@dataclass(frozen=True, eq=False)
class SCFState:
    config: SCFConfig
    field: ScalarField
    density: ScalarField
    external: ScalarField
    log_q: float
    log_q2: float | None
    iterations: int
    residuals: list = field(repr=False)
    converged: bool = True
    energy: FreeEnergy | None = None

    @property
    def grid(self):
        return self.field.grid

    @property
    def partition_function(self):
        return math.exp(self.log_q)


def _hartree_of_others(n: ScalarField, cfg: SCFConfig):
    if not cfg.include_hartree or cfg.n_particles <= 1:
        return None
    scale = (cfg.n_particles - 1) / cfg.n_particles
    return hartree_potential(ScalarField(n.grid, scale * n.values), cfg.softening)


def scf_solve(cfg: SCFConfig, spec: PotentialSpec | ScalarField, grid: Grid,
              initial: ScalarField | None = None) -> SCFState:
    """Iterate field and density to self-consistency.

    Returns the state with ``converged=False`` (and a warning) when
    ``max_iterations`` is exhausted.
    """
    v_ext = spec if isinstance(spec, ScalarField) else external_potential(spec, grid)
    pauli = PAULI_HOOKS[cfg.pauli]
    pairs = cfg.exchange_sign is not None
    w = initial if initial is not None else v_ext
    residuals = []
    converged = False
    for it in range(1, cfg.max_iterations + 1):
        tw = thermal_weights(w, cfg, pairs=pairs)
        n = ScalarField(grid, density_from_weights(tw, grid, cfg.n_particles, cfg.exchange_sign))
        new = v_ext.values.copy()
        vh = _hartree_of_others(n, cfg)
        if vh is not None:
            new += vh.values
        if pauli is not None:
            new += pauli(n, grid, cfg.beta).values
        if not np.all(np.isfinite(new)):
            raise DivergenceError(f"non-finite field at iteration {it}")
        res = float(np.max(np.abs(new - w.values)))
        residuals.append(res)
        log.debug("scf iteration %d residual %.3e", it, res)
        if res <= cfg.tolerance:
            converged = True
            break
        w = ScalarField(grid, (1 - cfg.mixing) * w.values + cfg.mixing * new)
    if not converged:
        warnings.warn(f"SCF did not converge in {cfg.max_iterations} iterations "
                      f"(residual {residuals[-1]:.2e})", RuntimeWarning, stacklevel=2)
    wts = grid.weights
    state = SCFState(cfg, w, n, v_ext, tw.log_q(wts),
                     tw.log_q2(wts) if pairs else None, it, residuals, converged)
    return replace(state, energy=total_free_energy(state))


def conformational_free_energy(n: ScalarField, qdiag: ScalarField, w: ScalarField,
                               beta: float) -> float:
    """``-(1/beta) int n [ln q(r, r, beta) + beta w] dr``."""
    occupied = n.values > 0
    if np.any(qdiag.values[occupied] <= 0):
        raise ValueError("ring weight must be positive wherever the density is")
    logq = np.zeros(n.grid.shape)
    logq[occupied] = np.log(qdiag.values[occupied])
    return _conformational(n, logq, w, beta)


def _conformational(n, logq, w, beta):
    integrand = np.where(n.values > 0, n.values * (logq + beta * w.values), 0.0)
    return -float(np.sum(n.grid.weights * integrand)) / beta


def _log_ring_weights(state: SCFState):
    # q(r, r) = n Q / N for the ring density
    n = state.density.values
    with np.errstate(divide="ignore"):
        return np.log(n) + state.log_q - math.log(state.config.n_particles)


def hartree_energy(state: SCFState) -> float:
    """Pair energy ``(1/2) int n v_H[(N-1)/N n]``, free of self-interaction."""
    vh = _hartree_of_others(state.density, state.config)
    if vh is None:
        return 0.0
    return 0.5 * float(integrate(ScalarField(state.grid, state.density.values * vh.values)))


def total_free_energy(state: SCFState) -> FreeEnergy:
    """Free-energy breakdown of a converged state.

    ``total = -(N/beta) ln Q - int w n + int v_ext n + E_H``. For pair-corrected
    states the first term is ``-(N/(2 beta)) ln[(Q**2 + Q(2beta))/2]``, which
    tends to the ring value as the pair terms saturate.
    """
    cfg = state.config
    beta, npart = cfg.beta, cfg.n_particles
    n, w, grid = state.density, state.field, state.grid
    if cfg.exchange_sign is None:
        ideal = -npart / beta * state.log_q
    elif cfg.exchange_sign == 1:
        ratio = math.exp(state.log_q2 - 2 * state.log_q)
        ideal = -npart / (2 * beta) * (2 * state.log_q + math.log1p(ratio) - math.log(2))
    else:
        raise ZeroPartitionError("antisymmetric pair states have no saturating free-energy reference")
    field_term = -float(integrate(ScalarField(grid, w.values * n.values)))
    external = float(integrate(ScalarField(grid, state.external.values * n.values)))
    e_h = hartree_energy(state)
    total = ideal + field_term + external + e_h
    if cfg.exchange_sign is None:
        conf = _conformational(n, _log_ring_weights(state), w, beta)
    else:
        conf = math.nan
    translational = ideal + field_term - conf if cfg.exchange_sign is None else math.nan
    return FreeEnergy(conf, translational, external, e_h, total)


def forbidden_interval(spec: PotentialSpec, grid: Grid):
    """Classically forbidden interval of a barrier or well on the positive side."""
    lo, hi = _lo_hi(grid)
    if spec.kind == "step-barrier":
        return spec.start, hi if spec.end is None else spec.end
    if spec.kind == "finite-well":
        return spec.half_width, hi
    raise ValueError(f"{spec.kind} potential has no forbidden region")


def forbidden_region_decay(n: ScalarField, region, floor: float = 1e-8) -> float:
    """Decay rate of ``n`` inside a forbidden region, from a log-linear fit.

    ``region`` is ``(start, end)`` or ``(PotentialSpec, ...)``-derived via
    :func:`forbidden_interval`. Points below ``floor * max(n)`` are dropped
    (the tail there is set by roundoff or thermal excitations), then 10% of
    the remaining span is trimmed from each end before the fit.
    """
    grid = n.grid
    if grid.ndim != 1:
        raise ConfigError("decay fits need a one-axis grid")
    if isinstance(region, PotentialSpec):
        region = forbidden_interval(region, grid)
    start, end = region
    x = grid.axes[0]
    vals = n.values
    inside = (x > start) & (x < end)
    if not np.any(inside):
        raise ValueError("forbidden region contains no grid points")
    if np.any(vals[inside] <= 0):
        raise ValueError("density must be positive inside the forbidden region")
    inside &= vals > floor * vals.max()
    if np.count_nonzero(inside) < 3:
        raise ValueError("forbidden region contains no resolvable density")
    xs = x[inside]
    span = xs[-1] - xs[0]
    keep = (xs >= xs[0] + 0.1 * span) & (xs <= xs[-1] - 0.1 * span)
    slope = np.polyfit(xs[keep], np.log(vals[inside][keep]), 1)[0]
    return float(abs(slope))
