"""
Benchmark configuration: a TOML document validated by pydantic models.

User-facing units are degrees, deg/h, mg, deg/sqrt(h) and ug/sqrt(Hz); the
conversion to the SI ``ScenarioConfig`` happens in :meth:`ScenarioSection.to_scenario`.
"""

import json
import math
import os
import tomllib
from pathlib import Path
from typing import Any, Literal

import numpy as np
import psutil
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from sinsalign.core.app.configtoml import TomlConfigFile
from sinsalign.core.data.unit import (
    STANDARD_GRAVITY,
    deg_per_hour_to_rad_per_sec,
    deg_per_sqrt_hour_to_rad_per_sqrt_sec,
    micro_g_per_sqrt_hz_to_m_s_per_sqrt_sec,
    milli_g_to_m_s2,
)
from sinsalign.nav.domain import EARTH_RATE, AlignError, EarthParams, ScenarioConfig
from sinsalign.nav.rotation import heading_pitch_roll_to_dcm

Method = Literal["oba", "oba_kf", "fgo"]
ALL_METHODS: tuple[Method, ...] = ("oba", "oba_kf", "fgo")

WORKERS_ENV = "SINSALIGN_WORKERS"


class ConfigError(AlignError):
    """Invalid benchmark configuration; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False, validate_assignment=True)


class ScenarioSection(_Section):
    duration_s: float = Field(900.0, gt=0)
    imu_rate_hz: float = Field(100.0, gt=0)
    latitude_deg: float = Field(45.0, ge=-90.0, le=90.0)
    earth_rate_rad_s: float = Field(EARTH_RATE, gt=0)
    gravity_m_s2: float = Field(STANDARD_GRAVITY, gt=0)
    initial_heading_deg: float = 30.0
    initial_pitch_deg: float = Field(0.0, ge=-90.0, le=90.0)
    initial_roll_deg: float = 0.0
    initial_heading_error_deg: float = 0.0
    turntable_rate_deg_s: float = 6.0
    gyro_bias_deg_h: tuple[float, float, float] = (-8.0, 6.0, -7.0)
    accel_bias_mg: tuple[float, float, float] = (1.0, -1.0, 1.0)
    gyro_arw_deg_sqrt_h: float = Field(0.1, ge=0)
    accel_vrw_ug_sqrt_hz: float = Field(50.0, ge=0)
    sway_accel_amp_m_s2: float = Field(0.0, ge=0)
    sway_period_s: float = Field(8.0, gt=0)
    seed: int = Field(42, ge=0)

    def earth(self) -> EarthParams:
        return EarthParams(
            latitude=math.radians(self.latitude_deg),
            earth_rate=self.earth_rate_rad_s,
            gravity_mag=self.gravity_m_s2,
        )

    def to_scenario(self, run: int = 0) -> ScenarioConfig:
        """SI scenario of Monte Carlo run ``run`` (seed = base seed + run)."""
        return ScenarioConfig(
            duration=self.duration_s,
            imu_rate=self.imu_rate_hz,
            earth=self.earth(),
            initial_attitude=heading_pitch_roll_to_dcm(self.initial_heading_deg, self.initial_pitch_deg, self.initial_roll_deg),
            initial_heading_error_deg=self.initial_heading_error_deg,
            turntable_rate=math.radians(self.turntable_rate_deg_s),
            gyro_bias=np.array([deg_per_hour_to_rad_per_sec(b) for b in self.gyro_bias_deg_h]),
            accel_bias=np.array([milli_g_to_m_s2(b) for b in self.accel_bias_mg]),
            gyro_arw=deg_per_sqrt_hour_to_rad_per_sqrt_sec(self.gyro_arw_deg_sqrt_h),
            accel_vrw=micro_g_per_sqrt_hz_to_m_s_per_sqrt_sec(self.accel_vrw_ug_sqrt_hz),
            sway_accel_amp=self.sway_accel_amp_m_s2,
            sway_period=self.sway_period_s,
            rng_seed=self.seed + run,
        )


class BenchSection(_Section):
    methods: list[Method] = Field(default_factory=lambda: list(ALL_METHODS), min_length=1)
    monte_carlo_runs: int = Field(20, ge=1)
    rmse_windows: list[tuple[float, float]] = Field(default_factory=lambda: [(200.0, 250.0), (300.0, 350.0), (850.0, 900.0)], min_length=1)
    output_dir: str = "results"
    emit_plot_data: bool = True
    workers: int = Field(1, ge=0)
    divergence_threshold_deg: float = Field(30.0, gt=0)
    divergence_tail_s: float = Field(50.0, gt=0)

    @field_validator("methods")
    @classmethod
    def _unique_methods(cls, value: list[str]) -> list[str]:
        if len(set(value)) != len(value):
            raise ValueError(f"methods must not repeat, got {value}")
        return value

    @field_validator("rmse_windows")
    @classmethod
    def _ordered_windows(cls, value: list[tuple[float, float]]) -> list[tuple[float, float]]:
        for start, end in value:
            if not 0 <= start < end:
                raise ValueError(f"window ({start}, {end}) must satisfy 0 <= start < end")
        return value


class ObaSection(_Section):
    pair_interval_s: float = Field(1.0, gt=0)


class KfSection(_Section):
    coarse_window_s: float = Field(120.0, gt=0)
    filter_interval_s: float = Field(0.1, gt=0)
    velocity_noise_m_s: float = Field(0.01, gt=0)


class FgoSection(_Section):
    keyframe_interval_s: float = Field(2.0, gt=0)
    resolve_stride: int = Field(1, ge=1)
    max_iterations: int = Field(50, ge=1)
    emit_solver_trace: bool = False


class RunConfig(_Section):
    scenario: ScenarioSection = Field(default_factory=ScenarioSection)
    bench: BenchSection = Field(default_factory=BenchSection)
    oba: ObaSection = Field(default_factory=ObaSection)
    kf: KfSection = Field(default_factory=KfSection)
    fgo: FgoSection = Field(default_factory=FgoSection)

    @model_validator(mode="after")
    def _check_against_duration(self) -> "RunConfig":
        duration = self.scenario.duration_s
        dt = 1.0 / self.scenario.imu_rate_hz
        problems = []
        for start, end in self.bench.rmse_windows:
            if end > duration:
                problems.append(f"bench.rmse_windows: window ({start}, {end}) ends after the scenario duration {duration} s")
        if self.bench.divergence_tail_s > duration:
            problems.append(f"bench.divergence_tail_s: {self.bench.divergence_tail_s} s exceeds the scenario duration {duration} s")
        if "oba_kf" in self.bench.methods and not self.kf.coarse_window_s < duration:
            problems.append(f"kf.coarse_window_s: {self.kf.coarse_window_s} s must be shorter than the scenario duration {duration} s")
        for key, value in (
            ("oba.pair_interval_s", self.oba.pair_interval_s),
            ("kf.filter_interval_s", self.kf.filter_interval_s),
            ("fgo.keyframe_interval_s", self.fgo.keyframe_interval_s),
        ):
            if value < dt - 1e-12:
                problems.append(f"{key}: {value} s is shorter than the IMU sample interval {dt} s")
        if problems:
            raise ValueError("; ".join(problems))
        return self


def _format_errors(exc: ValidationError) -> list[str]:
    errors = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"]) or "<root>"
        errors.append(f"{location}: {error['msg']}")
    return errors


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML benchmark configuration; missing keys take their defaults.

    :raises ConfigError: On TOML syntax errors (with line and column) or schema violations.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax error: {exc}"]) from exc
    return validate_config(data)


def validate_config(data: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from exc


def load_config(path: Path | str) -> RunConfig:
    """Read and parse a configuration file."""
    try:
        text = TomlConfigFile(Path(path)).read_text()
    except (FileNotFoundError, IsADirectoryError) as exc:
        raise ConfigError([str(exc)]) from exc
    return parse_config(text)


def apply_overrides(
    cfg: RunConfig,
    seed: int | None = None,
    output_dir: str | None = None,
    methods: list[str] | None = None,
    runs: int | None = None,
) -> RunConfig:
    """Return ``cfg`` with command-line overrides applied and re-validated."""
    data = cfg.model_dump(mode="python")
    if seed is not None:
        data["scenario"]["seed"] = seed
    if output_dir is not None:
        data["bench"]["output_dir"] = output_dir
    if methods is not None:
        data["bench"]["methods"] = methods
    if runs is not None:
        data["bench"]["monte_carlo_runs"] = runs
    return validate_config(data)


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} to TOML")


def serialize_config(cfg: RunConfig) -> str:
    """Write ``cfg`` back as TOML; parsing the result gives an equal config."""
    lines = []
    for section, values in cfg.model_dump(mode="python").items():
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        for key, value in values.items():
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def resolve_workers(cfg: RunConfig) -> int:
    """Worker count: ``SINSALIGN_WORKERS`` wins over the file; 0 means one per physical core."""
    raw = os.getenv(WORKERS_ENV)
    workers = cfg.bench.workers
    if raw:
        try:
            workers = int(raw)
        except ValueError as exc:
            raise ConfigError([f"{WORKERS_ENV}: expected an integer, got {raw!r}"]) from exc
        if workers < 0:
            raise ConfigError([f"{WORKERS_ENV}: must be non-negative, got {workers}"])
    if workers == 0:
        workers = psutil.cpu_count(logical=False) or 1
    return workers
