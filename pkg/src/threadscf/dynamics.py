"""Real-time single-orbital evolution and the double-slit screen experiment.

Orbitals obey ``i dpsi/dt = [-(1/2m) Laplacian + w] psi`` and are advanced by
the split-operator step

    psi <- exp(-i w dt/2) K(dt) exp(-i w dt/2) psi

where ``K`` is the exact free propagator in the Laplacian eigenbasis of the
grid. The step is unitary, time-reversible and second order in ``dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from . import _modes
from .domain import DIRICHLET, ComplexField, Grid, ScalarField, make_grid
from .errors import BoundaryError, ConfigError, GridError

BARRIER_HEIGHT = 1e3
ABSORB_FRACTION = 0.1
ABSORB_STRENGTH = 30.0
# probability in the outermost cells that means the absorber was overrun
EDGE_TOLERANCE = 1e-3
PROMINENCE = 0.1


@dataclass(frozen=True, eq=False)
class WavepacketState:
    psi: ComplexField
    t: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.psi.grid


def _per_axis(value, ndim, name):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.repeat(arr, ndim)
    if arr.size != ndim:
        raise ConfigError(f"{name} needs {ndim} components, got {arr.size}")
    return arr


def init_gaussian_packet(grid: Grid, center, momentum, width) -> WavepacketState:
    """Normalized ``exp(-|r - c|**2/(4 sigma**2) + i k.r)``; ``width`` may differ per axis."""
    c = _per_axis(center, grid.ndim, "center")
    k = _per_axis(momentum, grid.ndim, "momentum")
    sig = _per_axis(width, grid.ndim, "width")
    if np.any(sig <= 0):
        raise ConfigError("packet width must be positive")
    for ax in range(grid.ndim):
        if grid.boundaries[ax] != DIRICHLET:
            continue
        lo = -grid.extents[ax] / 2 if not grid.radial else 0.0
        hi = lo + grid.extents[ax]
        if min(c[ax] - lo, hi - c[ax]) < 5 * sig[ax]:
            raise BoundaryError(f"packet within 5 widths of the boundary on axis {ax}")
    expo = np.zeros(grid.shape, dtype=complex)
    for ax, x in enumerate(grid.coords):
        expo += -((x - c[ax]) ** 2) / (4 * sig[ax] ** 2) + 1j * k[ax] * x
    psi = np.exp(expo)
    psi /= math.sqrt(np.sum(grid.weights * np.abs(psi) ** 2))
    return WavepacketState(ComplexField(grid, psi), 0.0)


class _Stepper:
    """Split-operator step on raw arrays with the phase factors computed once."""

    def __init__(self, grid, w, dt, mass, mask=None):
        self.grid = grid
        self.half = np.exp(-0.5j * dt * np.asarray(w))
        self.kinetic = [np.exp(-0.5j * dt * grid.wavenumbers(ax) ** 2 / mass)
                        for ax in range(grid.ndim)]
        if mask is not None:
            self.half = self.half * np.sqrt(mask)

    def __call__(self, psi):
        psi = self.half * psi
        psi = _modes.apply_mode_tables(psi, self.grid, self.kinetic)
        return self.half * psi


def tdks_step(state: WavepacketState, w: ScalarField, dt: float, mass: float = 1.0,
              mask: np.ndarray | None = None) -> WavepacketState:
    """One split-operator step; an absorbing ``mask`` is split over the two half steps."""
    grid = state.grid
    if w.grid != grid:
        raise GridError("orbital and field live on different grids")
    psi = _Stepper(grid, w.values, dt, mass, mask)(state.psi.values)
    return WavepacketState(ComplexField(grid, psi), state.t + dt)


def density_dynamic(state: WavepacketState) -> ScalarField:
    return ScalarField(state.grid, np.abs(state.psi.values) ** 2)


@dataclass(frozen=True)
class Observables:
    t: float
    norm: float
    mean: tuple
    width: tuple
    energy: float


def observables(state: WavepacketState, w: ScalarField | None = None,
                mass: float = 1.0) -> Observables:
    """Norm, centroid, per-axis standard deviation and energy of the orbital."""
    grid = state.grid
    psi = state.psi.values
    wts = grid.weights
    dens = np.abs(psi) ** 2
    norm = float(np.sum(wts * dens))
    means, widths = [], []
    for x in grid.coords:
        m = float(np.sum(wts * dens * x)) / norm
        means.append(m)
        widths.append(math.sqrt(float(np.sum(wts * dens * (x - m) ** 2)) / norm))
    hpsi = _modes.apply_kinetic(psi, grid, mass)
    if w is not None:
        hpsi = hpsi + w.values * psi
    energy = float(np.real(np.sum(wts * np.conj(psi) * hpsi))) / norm
    return Observables(state.t, norm, tuple(means), tuple(widths), energy)


def absorbing_mask(grid: Grid, dt: float, strength: float = ABSORB_STRENGTH,
                   fraction: float = ABSORB_FRACTION) -> np.ndarray:
    """Per-step attenuation: a ``cos**2`` ramp over the outer ``fraction`` of each
    dirichlet axis, raised to ``strength * dt``. Periodic axes are left open."""
    mask = np.ones(grid.shape)
    for ax in range(grid.ndim):
        if grid.boundaries[ax] != DIRICHLET:
            continue
        x = grid.axes[ax]
        lo = x[0] - grid.spacing[ax] / 2
        hi = x[-1] + grid.spacing[ax] / 2
        ramp = fraction * (hi - lo)
        if grid.radial:
            # r = 0 is a regular point, not a wall
            depth = np.maximum(x - (hi - ramp), 0) / ramp
        else:
            depth = np.maximum(np.maximum(lo + ramp - x, x - (hi - ramp)), 0) / ramp
        prof = np.cos(0.5 * np.pi * depth) ** 2
        mask = mask * _modes._along(prof, ax, grid.ndim)
    return mask ** (strength * dt)


@dataclass(frozen=True, eq=False)
class DynamicsRun:
    """Time stepping plan. ``screen`` is the coordinate of a detector line
    ``x = screen`` on 2D grids (or a point on 1D grids)."""

    potential: ScalarField
    dt: float
    steps: int
    cadence: int = 10
    screen: float | None = None
    mass: float = 1.0
    absorb: bool = True
    absorb_strength: float = ABSORB_STRENGTH

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("time step must be positive")
        if self.steps < 0 or self.cadence < 1:
            raise ConfigError("need nonnegative steps and a positive cadence")
        if self.screen is not None:
            x = self.potential.grid.axes[0]
            if not x[0] <= self.screen <= x[-1]:
                raise ConfigError(f"screen at {self.screen} outside the grid")


@dataclass(frozen=True, eq=False)
class ScreenProfile:
    coords: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.any(np.asarray(self.values) < 0):
            raise ValueError("screen profile must be nonnegative")


@dataclass(frozen=True, eq=False)
class DynamicsResult:
    state: WavepacketState
    series: list = field(repr=False)  # Observables every ``cadence`` steps
    screen: ScreenProfile | None = None

    @property
    def absorbed(self) -> float:
        return 1.0 - self.series[-1].norm


def _edge_probability(dens, grid):
    """Probability in the two outermost cells of every dirichlet wall."""
    wd = grid.weights * dens
    total = 0.0
    for ax in range(grid.ndim):
        if grid.boundaries[ax] != DIRICHLET:
            continue
        walls = [slice(-2, None)] if grid.radial else [slice(0, 2), slice(-2, None)]
        for sl in walls:
            idx = [slice(None)] * grid.ndim
            idx[ax] = sl
            total += float(np.sum(wd[tuple(idx)]))
    return total


def propagate(run: DynamicsRun, state: WavepacketState) -> DynamicsResult:
    """Step ``state`` through ``run``, recording observables and the screen.

    The screen accumulates ``|psi|**2 dt`` on the detector line every step.
    Raises ``BoundaryError`` when probability piles up in the outermost cells,
    i.e. the absorbing layer no longer keeps the packet off the walls.
    """
    w = run.potential
    grid = state.grid
    mask = absorbing_mask(grid, run.dt, run.absorb_strength) if run.absorb else None
    col = None
    if run.screen is not None:
        col = int(np.argmin(np.abs(grid.axes[0] - run.screen)))
        acc = np.zeros(grid.shape[1:]) if grid.ndim > 1 else np.zeros(1)
    series = [observables(state, w, run.mass)]
    step_fn = _Stepper(grid, w.values, run.dt, run.mass, mask)
    psi, t0 = state.psi.values, state.t
    for step in range(1, run.steps + 1):
        psi = step_fn(psi)
        if col is not None:
            acc += run.dt * np.abs(psi[col]) ** 2
        if step % run.cadence == 0 or step == run.steps:
            state = WavepacketState(ComplexField(grid, psi), t0 + step * run.dt)
            series.append(observables(state, w, run.mass))
            if mask is not None and _edge_probability(np.abs(psi) ** 2, grid) > EDGE_TOLERANCE:
                raise BoundaryError(f"packet reached the grid edge at t = {state.t:.3f}")
    screen = None
    if col is not None:
        coords = grid.axes[1] if grid.ndim > 1 else grid.axes[0][col:col + 1]
        screen = ScreenProfile(np.array(coords), acc)
    return DynamicsResult(state, series, screen)


@dataclass(frozen=True)
class DoubleSlit:
    """Wall normal to x with two slits symmetric about ``y = 0``.

    ``open`` selects which slits pass: ``"both"``, ``"upper"`` or ``"lower"``.
    Edges are ``tanh`` ramps with scale one grid spacing, so each edge rises
    over about two spacings.
    """

    wall_x: float = -20.0
    thickness: float = 0.5
    separation: float = 4.0
    slit_width: float = 1.5
    screen_distance: float = 40.0
    height: float = BARRIER_HEIGHT
    open: str = "both"

    def __post_init__(self):
        if self.open not in ("both", "upper", "lower"):
            raise ConfigError(f"unknown slit selection {self.open!r}")
        if not 0 < self.slit_width < self.separation:
            raise ConfigError("slits must be narrower than their separation")

    @property
    def screen_x(self) -> float:
        return self.wall_x + self.screen_distance

    def potential(self, grid: Grid) -> ScalarField:
        if grid.kind != "cartesian-2d":
            raise ConfigError("the double slit needs a cartesian-2d grid")
        eps = max(grid.spacing)
        x, y = grid.coords

        def window(u, a, b):
            return 0.5 * (np.tanh((u - a) / eps) - np.tanh((u - b) / eps))

        half = 0.5 * self.thickness
        wall = window(x, self.wall_x - half, self.wall_x + half)
        holes = np.zeros(grid.shape)
        centres = {"both": (1, -1), "upper": (1,), "lower": (-1,)}[self.open]
        for s in centres:
            yc = s * self.separation / 2
            holes += window(y, yc - self.slit_width / 2, yc + self.slit_width / 2)
        return ScalarField(grid, self.height * wall * (1 - holes))


@dataclass(frozen=True)
class DoubleSlitScenario:
    slit: DoubleSlit = DoubleSlit()
    extent: float = 80.0
    points: int = 512
    momentum: float = 5.0
    start_x: float = -30.0
    width: tuple = (1.5, 6.0)
    dt: float = 0.002
    duration: float = 16.0
    mass: float = 1.0

    def grid(self) -> Grid:
        return make_grid("cartesian-2d", self.extent, self.points, DIRICHLET)

    def run(self) -> DynamicsRun:
        steps = int(round(self.duration / self.dt))
        return DynamicsRun(self.slit.potential(self.grid()), self.dt, steps,
                           cadence=100, screen=self.slit.screen_x, mass=self.mass)

    def initial_state(self) -> WavepacketState:
        return init_gaussian_packet(self.grid(), (self.start_x, 0.0),
                                    (self.momentum, 0.0), self.width)

    @property
    def fraunhofer_spacing(self) -> float:
        wavelength = 2 * np.pi / self.momentum
        return wavelength * self.slit.screen_distance / self.slit.separation


def run_double_slit(scenario: DoubleSlitScenario) -> ScreenProfile:
    """Time-integrated density along the screen line behind the slits."""
    return propagate(scenario.run(), scenario.initial_state()).screen


def _refine_peak(y, v, i):
    # vertex of the parabola through the three samples around a maximum
    if i == 0 or i == len(v) - 1:
        return y[i]
    a, b, c = v[i - 1], v[i], v[i + 1]
    denom = a - 2 * b + c
    if denom == 0:
        return y[i]
    return y[i] + 0.5 * (a - c) / denom * (y[i + 1] - y[i])


def fringe_spacing(profile: ScreenProfile, prominence: float = PROMINENCE):
    """Mean spacing of the three maxima nearest the centre of the screen.

    Maxima count when their prominence is at least ``prominence`` of the peak
    value. Returns ``None`` when fewer than three qualify.
    """
    y = np.asarray(profile.coords, dtype=float)
    v = np.asarray(profile.values, dtype=float)
    if v.size < 3 or not np.max(v) > 0:
        return None
    idx, _ = find_peaks(v, prominence=prominence * np.max(v))
    if idx.size < 3:
        return None
    centre = 0.5 * (y[0] + y[-1])
    near = np.sort(idx[np.argsort(np.abs(y[idx] - centre))[:3]])
    pos = [_refine_peak(y, v, i) for i in near]
    return float(np.mean(np.diff(pos)))
