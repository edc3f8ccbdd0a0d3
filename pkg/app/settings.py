"""Run-config schema: one file drives one command.

Every block is optional; missing keys take the measured-device defaults and
per-command defaults are filled in once the command is known, so the dumped
config is fully resolved and reproduces the run.
"""
from __future__ import annotations

import json
import math
import os
from typing import Literal, Optional

import numpy as np
import numpy.typing as npt
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.errors import ConfigError
from app.model.params import (
    LaserConfig,
    NoiseConfig,
    PulseProfile,
    RelaxationConfig,
    StrainDriveConfig,
    canonicalize,
    strain_from_spectroscopy,
)

Command = Literal["ple-sweep", "rabi-time", "rabi-freq", "decoherence", "floquet-spectrum", "compare-methods"]
COMMANDS: tuple[str, ...] = Command.__args__

SPECTROSCOPY_COMMANDS = ("ple-sweep", "rabi-freq")

_COMMAND_DEFAULTS: dict[str, dict[str, float]] = {
    "ple-sweep": {"omega_lx": 0.05, "omega_ly": 0.05, "beta": 0.7, "sigma": 0.0, "n_samples": 1},
    "rabi-freq": {"omega_lx": 0.05, "omega_ly": 0.05, "beta": 0.7, "sigma": 0.0, "n_samples": 1},
    "rabi-time": {"omega_lx": 0.22, "omega_ly": 0.022, "beta": 0.6, "sigma": 0.030, "n_samples": 50},
    "decoherence": {"omega_lx": 0.22, "omega_ly": 0.022, "beta": 0.6, "sigma": 0.035, "n_samples": 500},
    "floquet-spectrum": {"omega_lx": 0.05, "omega_ly": 0.05, "beta": 0.7, "sigma": 0.0, "n_samples": 1},
    "compare-methods": {"omega_lx": 0.05, "omega_ly": 0.05, "beta": 0.7, "sigma": 0.0, "n_samples": 1},
}


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PhysicsBlock(_Block):
    splitting: float = Field(6.41, gt=0)
    dipole_angle: float = -6.5
    V_A1: float = 0.0
    # explicit statics override the splitting/angle route
    V_E1: Optional[float] = None
    V_E2: Optional[float] = None
    E1: float = 0.0
    A1: Optional[float] = None
    a1_ratio: float = -0.7
    f_m: float = 1.296
    phase_m: float = 0.0
    n: int = Field(5, ge=1)
    detuning_x: float = 0.0
    omega_lx: Optional[float] = Field(None, ge=0)
    omega_ly: Optional[float] = Field(None, ge=0)
    rise_time: float = Field(0.75, ge=0)
    pulse_width: float = Field(1.0, ge=0)
    pulse_separation: float = Field(100.0, gt=0)
    pulse_count: int = Field(2, ge=1)
    pulse_start: float = 5.0
    closed_field_fraction: float = Field(0.08, ge=0, le=1)
    gamma_opt: float = Field(1.0 / 12.0, ge=0)
    gamma_orb: float = Field(1.0 / 10.0, ge=0)
    sigma: Optional[float] = Field(None, ge=0)
    n_samples: Optional[int] = Field(None, ge=1)
    alpha: float = Field(1.0, gt=0)
    beta: Optional[float] = Field(None, ge=0, le=1)
    power_calibration: Optional[float] = Field(None, gt=0)
    delta_scale: float = Field(1.0, gt=0)
    perturb_a1: bool = False

    @field_validator("f_m")
    @classmethod
    def _f_m_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("f_m must be positive")
        return v

    @field_validator("a1_ratio")
    @classmethod
    def _ratio_nonzero(cls, v: float) -> float:
        if v == 0:
            raise ValueError("a1_ratio must be nonzero")
        return v

    @model_validator(mode="after")
    def _statics_together(self) -> "PhysicsBlock":
        if (self.V_E1 is None) != (self.V_E2 is None):
            raise ValueError("V_E1 and V_E2 must be given together")
        return self


class RangeSpec(_Block):
    start: float
    stop: float
    step: float = Field(gt=0)

    @model_validator(mode="after")
    def _ordered(self) -> "RangeSpec":
        if self.stop < self.start:
            raise ValueError("stop must not be below start")
        return self

    def values(self) -> npt.NDArray[np.float64]:
        """Inclusive grid start, start + step, ..., stop."""
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + np.arange(count) * self.step, 12)


class GridsBlock(_Block):
    drive: RangeSpec = Field(default_factory=lambda: RangeSpec(start=0.0, stop=7.0, step=0.1))
    drive_powers_mw: Optional[list[float]] = None
    detuning: RangeSpec = Field(default_factory=lambda: RangeSpec(start=-8.0, stop=2.0, step=0.05))
    evolve_window: tuple[float, float] = (0.0, 50.0)
    time_step: float = Field(0.05, gt=0)
    t_stop: float = Field(20.0, gt=0)
    t_step: float = Field(0.05, gt=0)
    bin_width: float = Field(0.1, gt=0)
    time_span: float = Field(60.0, gt=0)
    random_drive_phase: bool = True
    tolerance: float = Field(1e-8, gt=0)
    min_line_weight: float = Field(1e-6, ge=0)

    @field_validator("drive_powers_mw")
    @classmethod
    def _powers_non_negative(cls, v: Optional[list[float]]) -> Optional[list[float]]:
        if v is not None and (not v or any(p < 0 for p in v)):
            raise ValueError("drive_powers_mw must be a non-empty list of non-negative powers")
        return v


class OutputBlock(_Block):
    path: str = "out"
    format: Literal["csv", "json"] = "csv"
    name: Optional[str] = None


class RunConfig(_Block):
    command: Command = "compare-methods"
    physics: PhysicsBlock = Field(default_factory=PhysicsBlock)
    grids: GridsBlock = Field(default_factory=GridsBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)
    seed: int = Field(0, ge=0, le=(1 << 64) - 1)

    @model_validator(mode="after")
    def _resolve(self) -> "RunConfig":
        defaults = _COMMAND_DEFAULTS[self.command]
        phys = self.physics
        for key, value in defaults.items():
            if getattr(phys, key) is None:
                setattr(phys, key, value)
        if phys.V_E1 is None:
            phys.V_E1, phys.V_E2 = strain_from_spectroscopy(phys.splitting, phys.dipole_angle)
        if phys.A1 is None:
            phys.A1 = phys.E1 / phys.a1_ratio
        if self.output.name is None:
            self.output.name = self.command.replace("-", "_")
        if self.grids.drive_powers_mw is not None and phys.power_calibration is None:
            raise ValueError("drive_powers_mw needs physics.power_calibration")
        # model constructors validate before dispatch
        self.strain_drive()
        self.laser()
        self.relaxation()
        self.noise()
        return self

    # -- validated physics objects ------------------------------------------

    def strain_drive(self, E1: Optional[float] = None) -> StrainDriveConfig:
        """Canonical statics and drive; E1 replaces the configured drive with A1 = E1 / a1_ratio."""
        p = self.physics
        e1, a1 = (p.E1, p.A1) if E1 is None else (E1, E1 / p.a1_ratio)
        raw = StrainDriveConfig(V_A1=p.V_A1, V_E1=p.V_E1, V_E2=p.V_E2, A1=a1, E1=e1, f_m=p.f_m, phase_m=p.phase_m, n=p.n)
        return canonicalize(raw)

    def pulse(self) -> PulseProfile:
        p = self.physics
        return PulseProfile(
            rise_time=p.rise_time,
            pulse_width=p.pulse_width,
            pulse_separation=p.pulse_separation,
            pulse_count=p.pulse_count,
            closed_field_fraction=p.closed_field_fraction,
            start_time=p.pulse_start,
        )

    def laser(self) -> LaserConfig:
        p = self.physics
        return LaserConfig(detuning_x=p.detuning_x, omega_lx=p.omega_lx, omega_ly=p.omega_ly)

    def relaxation(self) -> RelaxationConfig:
        return RelaxationConfig(gamma_opt=self.physics.gamma_opt, gamma_orb=self.physics.gamma_orb)

    def noise(self) -> NoiseConfig:
        return NoiseConfig(sigma=self.physics.sigma, n_samples=self.physics.n_samples, seed=self.seed)

    def drive_values(self) -> npt.NDArray[np.float64]:
        """E1 grid in GHz; drive powers map through E1 = k sqrt(P)."""
        if self.grids.drive_powers_mw is not None:
            k = self.physics.power_calibration
            return np.array([k * math.sqrt(p) for p in self.grids.drive_powers_mw])
        return self.grids.drive.values()

    def time_grid(self) -> npt.NDArray[np.float64]:
        count = int(round(self.grids.t_stop / self.grids.t_step))
        return np.arange(count + 1) * self.grids.t_step

    def output_paths(self) -> tuple[str, str]:
        stem = os.path.join(self.output.path, self.output.name)
        return f"{stem}.{self.output.format}", f"{stem}.meta.json"

    def dump_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def _format_validation_error(err: ValidationError) -> str:
    parts = []
    for item in err.errors():
        loc = ".".join(str(x) for x in item.get("loc", ())) or "config"
        parts.append(f"{loc}: {item.get('msg', 'invalid value')}")
    return "; ".join(parts)


def _read_raw(path: str) -> object:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from e
    if not text.strip():
        return {}
    if path.lower().endswith(".json"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark is not None else path
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigError(f"{where}: {problem}") from e


def build_config(data: object, overrides: Optional[dict] = None) -> RunConfig:
    """Validate a parsed mapping (plus CLI overrides) into a RunConfig."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    merged = dict(data)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "out":
            merged["output"] = {**(merged.get("output") or {}), "path": value}
        else:
            merged[key] = value
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from e


def load_config(path: Optional[str], overrides: Optional[dict] = None) -> RunConfig:
    """Parse a JSON (or YAML) run config; no path means all defaults.

    Raises
    ------
    ConfigError
        On unreadable files, parse errors (with line:column) or validation
        errors naming the offending field.
    """
    data = _read_raw(path) if path else {}
    return build_config(data, overrides)
