"""Run configuration: a documented YAML schema with road-unit keys.

The schema is key-value with nested sections; every dimensional key
carries its unit as a suffix (rho_max_per_km, u_max_kph, sim_time_s).
Unknown keys are rejected with their full path, and a key that matches a
known one up to the unit suffix gets a dedicated mismatch error. An
empty document yields the full reference configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from .params import make_grid, params_from_paper_units
from .scenario import MODELS, Scenario

FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    """Raised for malformed, unknown, or out-of-range configuration."""


@dataclass(frozen=True)
class RunConfig:
    """A parsed configuration: the scenario plus run and output policy."""

    scenario: Scenario
    cfl: float
    output_dir: str
    output_cadence: float
    formats: tuple[str, ...]

    def __post_init__(self) -> None:
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.output_cadence <= 0.0:
            raise ValueError("output_cadence must be positive")
        if len(self.formats) == 0 or any(f not in FORMATS for f in self.formats):
            raise ValueError(f"formats must be a non-empty subset of {FORMATS}")


_SCHEMA: dict[str, dict[str, object]] = {
    "params": {
        "rho_max_per_km": 160.0,
        "u_max_kph": 115.0,
        "rho_0_per_km": 50.0,
        "b_0": 1.0,
        "road_length_m": 2000.0,
        "sim_time_s": 120.0,
    },
    "scenario": {
        "model": "linear",
        "ic_amplitude_per_km": 10.0,
        "bc_osc_amplitude_per_km": 5.0,
        "bc_osc_period_s": 20.0,
        "bc_reading": "km",
        "bc_decay_rate_per_s": None,
        "bc_growth_rate_per_km_s": None,
    },
    "control": {
        "enabled": True,
        "q0": 5e-5,
        "r0": 1.0,
        "b_min": 0.1,
        "b_max": 2.0,
    },
    "numerics": {
        "n_cells": 400,
        "cfl": 0.9,
    },
    "output": {
        "dir": "out",
        "cadence_s": 0.5,
        "formats": list(FORMATS),
    },
}


def _merge_section(section: str, given: dict) -> dict:
    schema = _SCHEMA[section]
    for key in given:
        if key in schema:
            continue
        related = sorted(
            known
            for known in schema
            if known.startswith(str(key)) or str(key).startswith(known)
        )
        if related:
            raise ConfigError(
                f"unit-suffix mismatch at {section}.{key}: did you mean "
                f"{', '.join(repr(k) for k in related)}?"
            )
        raise ConfigError(f"unknown config key: {section}.{key}")
    return {**schema, **given}


def _number(section: str, key: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    return float(value)


def _count(section: str, key: str, value: object) -> int:
    number = _number(section, key, value)
    if number != int(number):
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    return int(number)


def _flag(section: str, key: str, value: object) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{section}.{key} must be true or false, got {value!r}")
    return value


def _choice(section: str, key: str, value: object, options: tuple[str, ...]) -> str:
    if value not in options:
        raise ConfigError(f"{section}.{key} must be one of {options}, got {value!r}")
    return str(value)


def parse_config(text: str) -> RunConfig:
    """Parse a YAML document into a RunConfig, applying defaults."""
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("config root must be a mapping of sections")
    for section in document:
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section: {section}")
        if not isinstance(document[section], dict):
            raise ConfigError(f"config section {section} must be a mapping")
    merged = {
        section: _merge_section(section, document.get(section, {}))
        for section in _SCHEMA
    }

    par = merged["params"]
    try:
        params = params_from_paper_units(
            _number("params", "rho_max_per_km", par["rho_max_per_km"]),
            _number("params", "u_max_kph", par["u_max_kph"]),
            _number("params", "rho_0_per_km", par["rho_0_per_km"]),
            _number("params", "road_length_m", par["road_length_m"]),
            _number("params", "sim_time_s", par["sim_time_s"]),
            _number("params", "b_0", par["b_0"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    num = merged["numerics"]
    n_cells = _count("numerics", "n_cells", num["n_cells"])
    cfl = _number("numerics", "cfl", num["cfl"])
    try:
        grid = make_grid(params.road_length, n_cells)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    scn = merged["scenario"]
    reading = _choice("scenario", "bc_reading", scn["bc_reading"], ("km", "m"))
    length_scale = params.road_length / 1000.0 if reading == "km" else params.road_length
    decay = scn["bc_decay_rate_per_s"]
    growth = scn["bc_growth_rate_per_km_s"]
    bc_decay_rate = (
        length_scale * 1e-6
        if decay is None
        else _number("scenario", "bc_decay_rate_per_s", decay)
    )
    bc_growth_rate = (
        1.0 / (4.0 * length_scale)
        if growth is None
        else _number("scenario", "bc_growth_rate_per_km_s", growth)
    )

    ctl = merged["control"]
    r0 = _number("control", "r0", ctl["r0"])
    if r0 != 1.0:
        raise ConfigError(
            "control.r0 must be 1.0: the closed-form feedback is derived for this weight"
        )
    try:
        scenario = Scenario(
            params=params,
            grid=grid,
            q0=_number("control", "q0", ctl["q0"]),
            bc_decay_rate=bc_decay_rate,
            bc_growth_rate=bc_growth_rate,
            ic_amplitude=_number("scenario", "ic_amplitude_per_km", scn["ic_amplitude_per_km"]),
            bc_osc_amplitude=_number(
                "scenario", "bc_osc_amplitude_per_km", scn["bc_osc_amplitude_per_km"]
            ),
            bc_osc_period=_number("scenario", "bc_osc_period_s", scn["bc_osc_period_s"]),
            r0=r0,
            control_enabled=_flag("control", "enabled", ctl["enabled"]),
            model=_choice("scenario", "model", scn["model"], MODELS),
            clamp=(
                _number("control", "b_min", ctl["b_min"]),
                _number("control", "b_max", ctl["b_max"]),
            ),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

    out = merged["output"]
    formats = out["formats"]
    if isinstance(formats, str):
        formats = [formats]
    if not isinstance(formats, (list, tuple)) or len(formats) == 0:
        raise ConfigError("output.formats must be a non-empty list")
    seen: list[str] = []
    for entry in formats:
        if entry not in FORMATS:
            raise ConfigError(f"output.formats entries must be in {FORMATS}, got {entry!r}")
        if entry not in seen:
            seen.append(str(entry))
    if not isinstance(out["dir"], str) or not out["dir"]:
        raise ConfigError("output.dir must be a non-empty string")
    try:
        return RunConfig(
            scenario=scenario,
            cfl=cfl,
            output_dir=out["dir"],
            output_cadence=_number("output", "cadence_s", out["cadence_s"]),
            formats=tuple(seen),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
