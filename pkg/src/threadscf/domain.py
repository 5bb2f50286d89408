"""Grids, fields, quadrature and unit conversions.

Every length is in Bohr and every energy in Hartree. Three grid kinds are
supported:

* ``cartesian-1d`` and ``cartesian-2d``: uniform axes, each either periodic
  (points ``-L/2 + j*h``, ``h = L/n``) or dirichlet-zero (cell-centred points
  ``-L/2 + (j + 1/2)*h``, the field vanishing on the two end faces).
* ``radial-3d``: spherically symmetric functions on ``r_j = (j + 1/2)*h``,
  ``h = R/n``, with zero boundary at ``r = 0`` and ``r = R`` for ``u = r*f``.

Quadrature is the midpoint/trapezoid rule on these uniform grids (identical for
periodic and cell-centred layouts); radial weights carry ``4*pi*r**2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import constants

from .errors import ConfigError, GridError

PERIODIC = "periodic"
DIRICHLET = "dirichlet-zero"
GRID_KINDS = ("cartesian-1d", "cartesian-2d", "radial-3d")
MIN_POINTS = 8

# Hartree per kelvin
KB_HARTREE = constants.physical_constants["kelvin-hartree relationship"][0]


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    kind: str
    extents: tuple[float, ...]
    counts: tuple[int, ...]
    boundaries: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in GRID_KINDS:
            raise GridError(f"unknown grid kind {self.kind!r}")
        ndim = 2 if self.kind == "cartesian-2d" else 1
        if not (len(self.extents) == len(self.counts) == len(self.boundaries) == ndim):
            raise GridError(f"{self.kind} needs {ndim} extent/count/boundary entries")
        for n, L in zip(self.counts, self.extents):
            if int(n) != n or n < MIN_POINTS:
                raise GridError(f"point count {n} below minimum {MIN_POINTS}")
            if not (np.isfinite(L) and L > 0):
                raise GridError(f"extent {L} must be positive")
        for b in self.boundaries:
            if b not in (PERIODIC, DIRICHLET):
                raise GridError(f"unknown boundary {b!r}")
        if self.kind == "radial-3d" and self.boundaries != (DIRICHLET,):
            raise GridError("radial-3d grids are dirichlet-zero at both ends")

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(n) for n in self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def radial(self) -> bool:
        return self.kind == "radial-3d"

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extents, self.counts))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        out = []
        for L, n, h, b in zip(self.extents, self.counts, self.spacing, self.boundaries):
            j = np.arange(n)
            if self.radial:
                x = (j + 0.5) * h
            elif b == PERIODIC:
                x = -L / 2 + j * h
            else:
                x = -L / 2 + (j + 0.5) * h
            out.append(_frozen(x))
        return tuple(out)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Per-axis coordinate arrays broadcast to the full grid shape."""
        return tuple(_frozen(c) for c in np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def weights(self) -> np.ndarray:
        if self.radial:
            r = self.axes[0]
            return _frozen(4 * np.pi * r**2 * self.spacing[0])
        return _frozen(np.full(self.shape, self.cell_volume))

    @property
    def measure(self) -> float:
        if self.radial:
            return 4 / 3 * np.pi * self.extents[0] ** 3
        return float(np.prod(self.extents))

    def wavenumbers(self, axis: int) -> np.ndarray:
        """Wavenumbers of the Laplacian eigenmodes along ``axis``.

        Fourier modes for periodic axes (``fft`` order), sine modes
        ``pi*j/L`` (``j = 1..n``, ``dst`` order) for dirichlet axes.
        """
        n, L, b = self.counts[axis], self.extents[axis], self.boundaries[axis]
        if b == PERIODIC:
            return 2 * np.pi * np.fft.fftfreq(n, d=L / n)
        return np.pi * np.arange(1, n + 1) / L

    def check_same(self, other: "Grid") -> None:
        if other != self:
            raise GridError("fields live on different grids")


def make_grid(kind, extents, counts, boundary=PERIODIC) -> Grid:
    """Build a grid; scalars are broadcast to every axis.

    >>> make_grid("cartesian-1d", 10.0, 256).spacing
    (0.0390625,)
    """
    ndim = 2 if kind == "cartesian-2d" else 1

    def per_axis(v):
        if np.ndim(v) == 0:
            return (v,) * ndim
        return tuple(v)

    if kind == "radial-3d":
        boundary = DIRICHLET
    extents = tuple(float(e) for e in per_axis(extents))
    counts = per_axis(counts)
    for n in counts:
        if int(n) != n:
            raise GridError(f"point count {n} is not an integer")
    counts = tuple(int(n) for n in counts)
    return Grid(kind, extents, counts, per_axis(boundary))


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    _dtype = float

    def __post_init__(self):
        v = np.array(self.values, dtype=self._dtype)
        if v.size != self.grid.size:
            raise GridError(f"{v.size} values for a grid of {self.grid.size} points")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_function(cls, grid: Grid, func):
        return cls(grid, func(*grid.coords))

    def integrate(self):
        return integrate(self)

    def at(self, *point):
        """Linear interpolation of the field at ``point`` (1D and radial grids)."""
        if self.grid.ndim != 1:
            raise NotImplementedError("interpolation only on one-axis grids")
        return np.interp(point[0], self.grid.axes[0], self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


class ComplexField(ScalarField):
    _dtype = complex


def integrate(f: ScalarField):
    """Quadrature sum of ``f`` over its grid."""
    return np.sum(f.grid.weights * f.values)


@dataclass(frozen=True)
class UnitSystem:
    """Hartree atomic units with a particle mass and Boltzmann constant."""

    mass: float = 1.0
    k_boltzmann: float = KB_HARTREE

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigError("mass must be positive")
        if not self.k_boltzmann > 0:
            raise ConfigError("Boltzmann constant must be positive")


ATOMIC = UnitSystem()


def beta_from_temperature(temperature: float, units: UnitSystem = ATOMIC) -> float:
    """Inverse thermal energy in 1/Hartree for a temperature in kelvin."""
    if not temperature > 0:
        raise ConfigError(f"nonpositive temperature {temperature}")
    return 1.0 / (units.k_boltzmann * temperature)
