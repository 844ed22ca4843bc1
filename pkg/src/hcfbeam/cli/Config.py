from __future__ import annotations

import re
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

import yaml
from pint import UndefinedUnitError, UnitRegistry
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, model_validator

from ..control import ControllerConfig
from ..flatness import ReferenceTrajectory, make_reference
from ..model import BeamModel, BeamParameters, RiemannField, build_model
from ..simulation import (InputSource, Scheme, SimConfig, delay_line_step, initial_conditions, make_input,
                          registered_initial_conditions)
from .exceptions import ConfigInvalid, UnknownUnitError

SCHEMA_VERSION = 1

_ureg = UnitRegistry(autoconvert_offset_to_baseunit=True)
_QUANTITY_RE = re.compile(r"^\s*[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?\s+[^\s].*$")


def _to_si(value: Any) -> Any:
    """
    ``"<value> <unit>"`` strings become their magnitude in SI base units;
    anything else is passed through for the field's own validation.
    """
    if not isinstance(value, str) or not _QUANTITY_RE.match(value):
        return value
    number, unit = value.strip().split(None, 1)
    try:
        return float((float(number) * _ureg(unit)).to_base_units().magnitude)
    except (UndefinedUnitError, AssertionError) as exc:
        raise UnknownUnitError(f"Unknown unit “{unit}” in {value!r}") from exc


Scalar = Annotated[float, BeforeValidator(_to_si)]
Gain = Annotated[float, Field(gt=-1.0, lt=1.0)]
CoefficientSpec = Annotated[Union[float, str, dict[str, list[float]]], BeforeValidator(_to_si)]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BeamSection(_Section):
    """Coefficients as numbers, unit strings, expressions in ``z`` or ``{z, values}`` tables."""
    rho: CoefficientSpec = 0.8
    S: CoefficientSpec = 1.0
    kappa: CoefficientSpec = 1.25
    J: CoefficientSpec = 0.98
    EI: CoefficientSpec = 0.5


class GridSection(_Section):
    n_z: int = Field(141, ge=16)
    dt: Optional[Scalar] = Field(None, gt=0.0)
    kernel_h: Optional[float] = Field(None, gt=0.0, le=0.5)


class ControllerSection(_Section):
    gamma1: Gain = 0.0
    gamma2: Gain = 0.0
    gammas: Optional[list[tuple[Gain, Gain]]] = None

    def gain_pairs(self) -> list[tuple[float, float]]:
        return list(self.gammas) if self.gammas else [(self.gamma1, self.gamma2)]


class ReferenceSection(_Section):
    y0: tuple[Scalar, Scalar] = (0.0, 0.0)
    yT: tuple[Scalar, Scalar] = (0.1, -0.2)
    t0: Scalar = 4.5
    tT: Scalar = 5.5

    @model_validator(mode="after")
    def _window(self):
        if not self.tT > self.t0:
            raise ValueError(f"reference window is empty: tT = {self.tT} <= t0 = {self.t0}")
        return self


class InitialSection(_Section):
    kind: str = "sin2"
    amplitude: Scalar = 0.2
    w0: str = "0"
    phi0: str = "0"
    w1: str = "0"
    phi1: str = "0"


class SimulationSection(_Section):
    t_end: Scalar = Field(7.0, gt=0.0)
    scheme: str = "upwind"
    input: str = "closed-loop"
    ic: InitialSection = InitialSection()
    snapshot_dt: Scalar = Field(0.1, gt=0.0)


class OutputSection(_Section):
    dir: str = "out"
    kernel_cache: Optional[str] = None
    plan_dt: Scalar = Field(0.01, gt=0.0)


class ScenarioConfig(_Section):
    schema_version: Literal[1]
    beam: BeamSection = BeamSection()
    grid: GridSection = GridSection()
    controller: ControllerSection = ControllerSection()
    reference: ReferenceSection = ReferenceSection()
    simulation: SimulationSection = SimulationSection()
    output: OutputSection = OutputSection()

    @model_validator(mode="after")
    def _registered(self):
        sim = self.simulation
        if not Scheme.is_registered(sim.scheme):
            raise ValueError(f"unknown scheme {sim.scheme!r}, expected one of {Scheme.registered()}")
        if not InputSource.is_registered(sim.input):
            raise ValueError(f"unknown input source {sim.input!r}")
        if sim.ic.kind not in registered_initial_conditions():
            raise ValueError(f"unknown initial condition {sim.ic.kind!r}, expected one of {registered_initial_conditions()}")
        return self


# ---------------------------------------------------------------------- #
# LOADING
# ---------------------------------------------------------------------- #
def parse_config(data: Any, origin: str = "<config>") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{origin}: expected a mapping at the top level")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigInvalid(f"{origin}: schema_version must be {SCHEMA_VERSION}, got {data.get('schema_version')!r}")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigInvalid(f"{origin}: {exc}") from exc


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid(f"Config file {path} does not exist")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return parse_config(data, str(path))


# ---------------------------------------------------------------------- #
# BUILDERS
# ---------------------------------------------------------------------- #
def build_beam(cfg: ScenarioConfig) -> BeamModel:
    return build_model(BeamParameters.from_values(**cfg.beam.model_dump()), cfg.grid.n_z)


def kernel_step(cfg: ScenarioConfig) -> float:
    return cfg.grid.kernel_h if cfg.grid.kernel_h is not None else 1.0 / (cfg.grid.n_z - 1)


def build_reference(cfg: ScenarioConfig) -> ReferenceTrajectory:
    r = cfg.reference
    return make_reference(r.y0, r.yT, r.t0, r.tT)


def time_step(cfg: ScenarioConfig, model: BeamModel) -> float:
    """
    Configured dt, or the CFL limit dz / max(lambda1) when none is given. The
    delay-line scheme rounds the limit down to its common delay grid.
    """
    if cfg.grid.dt is not None: return cfg.grid.dt
    dt = model.dz / float(model.transport.lambda1.max())
    return delay_line_step(model, dt) if cfg.simulation.scheme == "delay-line" else dt


def build_initial_state(cfg: ScenarioConfig, model: BeamModel) -> RiemannField:
    ic = cfg.simulation.ic
    return initial_conditions(ic.kind, model, **ic.model_dump(exclude={"kind"}))


def build_sim(cfg: ScenarioConfig, model: BeamModel, gains: Optional[tuple[float, float]] = None) -> SimConfig:
    ref = build_reference(cfg)
    g1, g2 = gains if gains is not None else cfg.controller.gain_pairs()[0]
    source = make_input(cfg.simulation.input, ref=ref, controller=ControllerConfig(g1, g2, ref))
    return SimConfig(t_end=cfg.simulation.t_end, dt=time_step(cfg, model), scheme=cfg.simulation.scheme,
                     ic=build_initial_state(cfg, model), source=source, snapshot_dt=cfg.simulation.snapshot_dt)
