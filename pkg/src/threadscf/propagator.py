"""Imaginary-time thread propagator ``q(r0, r, s)``.

The propagator solves the modified diffusion equation

    dq/ds = (1/2m) Laplacian q - w q,     q(r0, r, 0) = delta(r - r0)

along the contour ``s in [0, beta]``. Each contour slice is a Strang step: a
half step of the field, an exact diffusion step in the eigenbasis of the grid
Laplacian, another half step of the field.

Dense kernels are stored for one-axis grids only. Kernels are kept with a
separate ``log_scale`` so that low temperatures do not overflow:
``q = kernel * exp(log_scale)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _modes
from .domain import ScalarField
from .errors import ConfigError, DivergenceError, GridError, ZeroPartitionError

SLICES_PER_BETA = 200
MIN_SLICES = 64
# contour step times the spread of the field; Coulomb cusps need this bound
STIFFNESS = 0.005
MIN_SCHEDULE_SLICES = 16
ZERO_PARTITION = 1e-300
RINGING_FLOOR = 1e-6


@dataclass(frozen=True)
class ContourSchedule:
    beta: float
    slices: int

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta >= 0):
            raise ConfigError(f"contour length {self.beta} must be nonnegative")
        if int(self.slices) != self.slices or self.slices < MIN_SCHEDULE_SLICES:
            raise ConfigError(f"need at least {MIN_SCHEDULE_SLICES} slices, got {self.slices}")

    @property
    def ds(self) -> float:
        return self.beta / self.slices

    @classmethod
    def default(cls, beta, per_beta=SLICES_PER_BETA, minimum=MIN_SLICES):
        return cls(beta, max(minimum, math.ceil(per_beta * beta)))

    @classmethod
    def for_field(cls, w, beta, per_beta=SLICES_PER_BETA, minimum=MIN_SLICES):
        """Default schedule, refined so that ``ds * (max w - min w) <= STIFFNESS``."""
        spread = float(np.ptp(np.asarray(w)))
        stiff = math.ceil(beta * spread / STIFFNESS) if spread > 0 else 0
        return cls(beta, max(minimum, math.ceil(per_beta * beta), stiff))


@dataclass(frozen=True, eq=False)
class Propagator:
    """Two-point kernel ``q[a, b] = q(r_a, r_b, beta)``, source point first."""

    grid: object
    beta: float
    kernel: np.ndarray = field(repr=False)
    log_scale: float = 0.0
    slices: int | None = None
    mass: float = 1.0

    @property
    def values(self):
        """Unscaled kernel; may overflow at large ``beta``."""
        return self.kernel * np.exp(self.log_scale)

    def scaled_diagonal(self):
        return np.diagonal(self.kernel).copy()


def _check_fields(*fields):
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridError("fields live on different grids")
    return grid


def _slice(values, w, grid, ds, mass, radial_scale=True):
    """One Strang slice on raw arrays; trailing axes of ``values`` are a batch."""
    half = np.exp(-0.5 * ds * w)
    half = half.reshape(half.shape + (1,) * (values.ndim - half.ndim))
    out = half * values
    out = _modes.apply_axis_factors(out, grid, lambda k: np.exp(-ds * k**2 / (2 * mass)),
                                    radial_scale=radial_scale)
    return half * out


def evolve_slice(q: ScalarField, w: ScalarField, ds: float, mass: float = 1.0) -> ScalarField:
    """Advance ``q`` by one contour step ``ds`` in the field ``w``."""
    grid = _check_fields(q, w)
    if ds < 0:
        raise ConfigError("contour step must be nonnegative")
    if ds == 0:
        return q
    return ScalarField(grid, _slice(q.values, w.values, grid, ds, mass))


def _renormalized(mat, log_scale):
    top = np.max(np.abs(mat))
    if not np.isfinite(top):
        raise DivergenceError("non-finite propagator entries; reduce the contour step")
    if top == 0:
        return mat, log_scale
    return mat / top, log_scale + math.log(top)


def _scaled_power(mat, power):
    """``mat**power`` by binary powering, renormalizing every product."""
    result, result_log = None, 0.0
    base, base_log = _renormalized(mat, 0.0)
    while power:
        if power & 1:
            if result is None:
                result, result_log = base, base_log
            else:
                result, result_log = _renormalized(result @ base, result_log + base_log)
        power >>= 1
        if power:
            base, base_log = _renormalized(base @ base, 2 * base_log)
    return result, result_log


def transfer_matrix(w: ScalarField, ds: float, mass: float = 1.0) -> np.ndarray:
    """One contour slice as a symmetric matrix acting on ``sqrt(weights) * q``."""
    grid = w.grid
    eye = np.eye(grid.size)
    # delta columns evolved through one slice, in the orthonormal representation
    # overflow surfaces as DivergenceError when the powers are renormalized
    with np.errstate(over="ignore", invalid="ignore"):
        mat = _slice(eye, w.values, grid, ds, mass, radial_scale=False)
        return 0.5 * (mat + mat.T)


def _kernel_from_symmetric(grid, sym, log_scale, beta, slices, mass):
    root = np.sqrt(grid.weights)
    kernel = sym / root[:, None] / root[None, :]
    # the exact kernel is positive; the band-limited grid kernel rings at the
    # level exp(-ds*slices*kmax**2/2m). Tiny negatives are zeroed, larger ones
    # are left visible because they mean the grid does not resolve the kernel.
    floor = RINGING_FLOOR * np.max(np.abs(kernel))
    kernel = np.where((kernel < 0) & (kernel > -floor), 0.0, kernel)
    return Propagator(grid, beta, kernel, log_scale, slices, mass)


def build_propagator(w: ScalarField, schedule: ContourSchedule | float,
                     mass: float = 1.0) -> Propagator:
    """Propagate a discretized delta from every grid point through the contour.

    The delta at a source point is ``1/weight`` there and zero elsewhere. All
    columns are evolved together: one slice is formed by stepping the delta
    columns, the full contour is its ``slices``-fold product.
    """
    grid = w.grid
    if grid.ndim != 1:
        raise GridError("dense propagators are limited to one-axis grids")
    if not isinstance(schedule, ContourSchedule):
        schedule = ContourSchedule.for_field(w.values, schedule)
    if schedule.beta == 0:
        sym, log_scale = np.eye(grid.size), 0.0
    else:
        one = transfer_matrix(w, schedule.ds, mass)
        sym, log_scale = _scaled_power(one, schedule.slices)
    return _kernel_from_symmetric(grid, sym, log_scale, schedule.beta, schedule.slices, mass)


def compose(pa: Propagator, pb: Propagator) -> Propagator:
    """Chain two kernels: ``int q_a(r0, r') q_b(r', r) dr'``."""
    if pa.grid != pb.grid:
        raise GridError("propagators live on different grids")
    prod = pa.kernel @ (pa.grid.weights[:, None] * pb.kernel)
    prod, log_scale = _renormalized(prod, pa.log_scale + pb.log_scale)
    slices = None if pa.slices is None or pb.slices is None else pa.slices + pb.slices
    return Propagator(pa.grid, pa.beta + pb.beta, prod, log_scale, slices, pa.mass)


def diagonal(p: Propagator) -> ScalarField:
    """Ring weights ``q(r, r, beta)``."""
    return ScalarField(p.grid, p.scaled_diagonal() * np.exp(p.log_scale))


def log_partition_function(p: Propagator) -> float:
    scaled = float(np.sum(p.grid.weights * p.scaled_diagonal()))
    if scaled <= 0:
        return -math.inf
    return math.log(scaled) + p.log_scale


def partition_function(p: Propagator) -> float:
    """``Q(beta)``, the integral of the ring weights."""
    return math.exp(log_partition_function(p))


def density_single(p: Propagator, n_particles: float) -> ScalarField:
    """Ring-polymer density ``N q(r, r, beta) / Q(beta)``."""
    if n_particles < 1:
        raise ConfigError("need at least one particle")
    if log_partition_function(p) < math.log(ZERO_PARTITION):
        raise ZeroPartitionError("single-particle partition function underflows")
    diag = p.scaled_diagonal()
    return ScalarField(p.grid, n_particles * diag / np.sum(p.grid.weights * diag))
