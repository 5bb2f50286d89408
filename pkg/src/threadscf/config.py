"""Strict JSON scenario configuration.

Unknown keys are rejected everywhere. A scenario config looks like::

    {
      "scenario": "scf",
      "grid": {"kind": "radial-3d", "extent": 20, "points": 512},
      "potential": {"kind": "coulomb-radial", "Z": 1},
      "physics": {"n_particles": 1, "beta": 40},
      "numerics": {"tolerance": 1e-8},
      "output": {"directory": "out/hydrogen"}
    }

Temperatures are in kelvin; ``beta`` is in inverse Hartree. Give one or the
other, never both.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .domain import PERIODIC, Grid, beta_from_temperature, make_grid
from .errors import ConfigError
from .scf import PotentialSpec

SCENARIOS = ("static", "scf", "pairs", "sweep", "dynamics", "double-slit")

Vector = Union[float, list[float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridBlock(_Strict):
    kind: Literal["cartesian-1d", "cartesian-2d", "radial-3d"]
    extent: Vector
    points: Union[int, list[int]]
    boundary: Literal["periodic", "dirichlet-zero"] = PERIODIC

    def build(self) -> Grid:
        return make_grid(self.kind, self.extent, self.points, self.boundary)


class PotentialBlock(_Strict):
    kind: Literal["coulomb-radial", "soft-coulomb-1d", "box", "step-barrier",
                  "harmonic", "finite-well", "tabulated"]
    Z: float = 1.0
    softening: float = 1.0
    height: float = 0.0
    start: float = 0.0
    end: Optional[float] = None
    omega: float = 1.0
    depth: float = 0.0
    half_width: float = 1.0
    values: Optional[list[float]] = None

    def build(self) -> PotentialSpec:
        data = self.model_dump()
        if data["values"] is not None:
            data["values"] = tuple(data["values"])
        return PotentialSpec(**data)


class PhysicsBlock(_Strict):
    n_particles: float = 1
    beta: Optional[float] = Field(default=None, gt=0)
    temperature: Optional[float] = Field(default=None, gt=0)
    sign: Literal[1, -1] = 1
    backend: Literal["propagator", "spectral"] = "propagator"
    include_hartree: bool = True
    pauli: str = "none"
    mass: float = Field(default=1.0, gt=0)
    softening: float = Field(default=1.0, gt=0)
    # pairs: saturation table; sweep: the temperature list in kelvin
    betas: Optional[list[float]] = None
    temperatures: Optional[list[float]] = None
    reference_energy: float = 0.0

    @model_validator(mode="after")
    def _one_temperature(self):
        if self.beta is not None and self.temperature is not None:
            raise ValueError("give either beta or temperature, not both")
        return self

    def resolved_beta(self) -> Optional[float]:
        if self.temperature is not None:
            return beta_from_temperature(self.temperature)
        return self.beta


class NumericsBlock(_Strict):
    slices: Optional[int] = Field(default=None, ge=16)
    tolerance: float = Field(default=1e-8, gt=0)
    mixing: float = Field(default=0.2, gt=0, le=1)
    max_iterations: int = Field(default=500, ge=1)
    states: int = Field(default=40, ge=1)
    dt: float = Field(default=0.002, gt=0)
    duration: float = Field(default=2.0, ge=0)
    cadence: int = Field(default=10, ge=1)


class PacketBlock(_Strict):
    center: Vector = 0.0
    momentum: Vector = 0.0
    width: Vector = 1.0
    absorb: bool = True
    screen: Optional[float] = None


class DoubleSlitBlock(_Strict):
    momentum: float = 5.0
    separation: float = 4.0
    slit_width: float = 1.5
    screen_distance: float = 40.0
    wall_x: float = -20.0
    thickness: float = 0.5
    height: float = 1e3
    open: Literal["both", "upper", "lower"] = "both"
    extent: float = 80.0
    points: int = 512
    start_x: float = -30.0
    width: list[float] = [1.5, 6.0]
    dt: float = 0.002
    duration: float = 16.0


class OutputBlock(_Strict):
    directory: Optional[str] = None
    formats: list[Literal["csv", "json"]] = ["csv", "json"]


_REQUIRED = {
    "static": ("grid", "potential"),
    "scf": ("grid", "potential"),
    "pairs": ("grid", "potential"),
    "sweep": ("grid", "potential"),
    "dynamics": ("grid", "potential"),
    "double-slit": (),
}


class ScenarioConfig(_Strict):
    scenario: Literal["static", "scf", "pairs", "sweep", "dynamics", "double-slit"]
    grid: Optional[GridBlock] = None
    potential: Optional[PotentialBlock] = None
    physics: PhysicsBlock = PhysicsBlock()
    numerics: NumericsBlock = NumericsBlock()
    packet: Optional[PacketBlock] = None
    double_slit: Optional[DoubleSlitBlock] = None
    output: OutputBlock = OutputBlock()

    @model_validator(mode="after")
    def _blocks_present(self):
        missing = [b for b in _REQUIRED[self.scenario] if getattr(self, b) is None]
        if missing:
            raise ValueError(f"scenario {self.scenario!r} needs block(s): {', '.join(missing)}")
        needs_beta = self.scenario in ("static", "scf", "pairs")
        if needs_beta and self.physics.resolved_beta() is None:
            raise ValueError(f"scenario {self.scenario!r} needs physics.beta or physics.temperature")
        if self.scenario == "sweep" and not self.physics.temperatures:
            raise ValueError("sweep needs physics.temperatures")
        return self


def _describe(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def parse_config(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {_describe(exc)}") from exc


def load_config(path) -> ScenarioConfig:
    """Read and validate a JSON scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno} column {exc.colno}: "
                          f"{exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(data)


__all__ = ["ScenarioConfig", "load_config", "parse_config", "SCENARIOS"]
