"""JSON run configuration: schema validation and conversion to model objects.

Keys carry their SI unit in the name (``kappa_per_s``, ``length_m``) so a
config file is self-describing. Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import jsonschema

from .dynamics import simulation_grid
from .errors import ValidationError
from .estimate import DeviceGeometry
from .model import ModeGrid, PhysicalParams, Wavepacket, build_mode_grid, gaussian_wavepacket, grid_from_count
from .sweep import OdeSettings, SweepAxis, SweepSpec

_RATE = {"type": "number", "minimum": 0}
_POS = {"type": "number", "exclusiveMinimum": 0}

_PHYSICS = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kappa_per_s": _RATE,
        "kappa_1_per_s": _RATE,
        "kappa_2_per_s": _RATE,
        "g_per_s": _RATE,
        "g_phase_rad": {"type": "number"},
        "gamma_1_per_s": _RATE,
        "gamma_2_per_s": _RATE,
        "mu_d_per_s": _RATE,
        "delta_12_rad_per_s": {"type": "number"},
        "omega_d_rad_per_s": _POS,
    },
}

_AXIS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "start", "stop", "num"],
    "properties": {
        "name": {"type": "string"},
        "start": {"type": "number", "minimum": 0},
        "stop": _POS,
        "num": {"type": "integer", "minimum": 2},
        "scale": {"enum": ["linear", "log"]},
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "physics": _PHYSICS,
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "length_m": _POS,
                "group_velocity_m_per_s": _POS,
                "n_modes": {"type": "integer", "minimum": 1},
                "margin": {"type": "number", "minimum": 2},
                "max_modes": {"type": "integer", "minimum": 1},
                "reservoir_factor": _POS,
                "spacing_fraction": _POS,
            },
        },
        "pulse": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "shape": {"enum": ["gaussian", "single_mode"]},
                "bandwidth_rad_per_s": _POS,
                "delay_s": {"type": "number"},
            },
        },
        "simulate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_final_s": _POS,
                "dt_s": _POS,
                "frame": {"enum": ["mode", "common"]},
                "rtol": _POS,
                "keep_modes": {"type": "boolean"},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_final_s": _POS,
                "dt_s": _POS,
                "rtol": _POS,
                "threshold": _POS,
                "cases": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["name"],
                        "properties": {
                            "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                            "physics": _PHYSICS,
                            "oracle_physics": _PHYSICS,
                        },
                    },
                },
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axis1"],
            "properties": {
                "axis1": _AXIS,
                "axis2": _AXIS,
                "mode": {"enum": ["closed_form", "ode"]},
                "symmetric": {"type": "boolean"},
                "refine": {"type": "boolean"},
                "ode": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "bandwidth_fraction": _POS,
                        "reservoir_factor": _POS,
                        "group_velocity_m_per_s": _POS,
                        "rtol": _POS,
                        "frame": {"enum": ["mode", "common"]},
                    },
                },
            },
        },
        "device": {
            "type": "object",
            "additionalProperties": False,
            "required": ["ring_radius_m", "ring_cross_section_m2", "chi2_m_per_V",
                         "lambda_drive_m", "lambda_signal_m", "lambda_idler_m"],
            "properties": {
                "ring_radius_m": _POS,
                "ring_cross_section_m2": _POS,
                "chi2_m_per_V": _RATE,
                "lambda_drive_m": _POS,
                "lambda_signal_m": _POS,
                "lambda_idler_m": _POS,
                "n_drive": _POS,
                "n_signal": _POS,
                "n_idler": _POS,
                "overlap_factor": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "omega_kd_rad_per_s": _RATE,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "prefix": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                "precision": {"type": "integer", "minimum": 1, "maximum": 17},
            },
        },
    },
}

_PHYSICS_KEYS = {
    "kappa_per_s": "kappa",
    "kappa_1_per_s": "kappa_1",
    "kappa_2_per_s": "kappa_2",
    "g_per_s": "g",
    "g_phase_rad": "g_phase",
    "gamma_1_per_s": "gamma_1",
    "gamma_2_per_s": "gamma_2",
    "mu_d_per_s": "mu_d",
    "delta_12_rad_per_s": "delta_12",
    "omega_d_rad_per_s": "omega_d",
}

DEFAULT_V_G = 7.5e7


@dataclass
class RunConfig:
    raw: dict
    sha256: str
    source: Optional[str] = None

    def section(self, name: str) -> dict:
        return self.raw.get(name, {})

    def require(self, name: str) -> dict:
        if name not in self.raw:
            raise ValidationError(f"config is missing the '{name}' section")
        return self.raw[name]

    # -- model objects -------------------------------------------------

    def physics(self, overrides: Optional[dict] = None) -> PhysicalParams:
        return physics_from_dict({**self.require("physics"), **(overrides or {})})

    def grid(self, params: PhysicalParams) -> ModeGrid:
        grid = self.section("grid")
        pulse = self.section("pulse")
        v_g = grid.get("group_velocity_m_per_s", DEFAULT_V_G)
        if "n_modes" in grid:
            if "length_m" not in grid:
                raise ValidationError("grid: n_modes requires length_m")
            return grid_from_count(grid["length_m"], v_g, grid["n_modes"])
        if "bandwidth_rad_per_s" not in pulse:
            raise ValidationError("pulse: bandwidth_rad_per_s is required to size the grid")
        bw = pulse["bandwidth_rad_per_s"]
        max_modes = grid.get("max_modes", 65535)
        if "reservoir_factor" in grid:
            return simulation_grid(params, bw, v_g=v_g, reservoir=grid["reservoir_factor"],
                                   spacing_fraction=grid.get("spacing_fraction", 1.0),
                                   max_modes=max_modes)
        if "length_m" not in grid:
            raise ValidationError("grid: length_m is required unless reservoir_factor is given")
        return build_mode_grid(grid["length_m"], v_g, bw, margin=grid.get("margin", 8),
                               max_modes=max_modes)

    def packet(self, grid: ModeGrid) -> Wavepacket:
        pulse = self.section("pulse")
        if pulse.get("shape", "gaussian") == "single_mode":
            amps = [0.0] * grid.n_modes
            amps[grid.center] = 1.0
            return Wavepacket.from_amplitudes(amps, pulse.get("bandwidth_rad_per_s", grid.spacing))
        if "bandwidth_rad_per_s" not in pulse:
            raise ValidationError("pulse: bandwidth_rad_per_s is required")
        return gaussian_wavepacket(grid, pulse["bandwidth_rad_per_s"], pulse.get("delay_s", 0.0))

    def device(self) -> DeviceGeometry:
        d = self.require("device")
        return DeviceGeometry(
            ring_radius=d["ring_radius_m"],
            ring_cross_section=d["ring_cross_section_m2"],
            chi2=d["chi2_m_per_V"],
            lambda_drive=d["lambda_drive_m"],
            lambda_signal=d["lambda_signal_m"],
            lambda_idler=d["lambda_idler_m"],
            n_drive=d.get("n_drive", 1.0),
            n_signal=d.get("n_signal", 1.0),
            n_idler=d.get("n_idler", 1.0),
            overlap_factor=d.get("overlap_factor", 1.0),
        )

    def sweep_spec(self, rtol: Optional[float] = None) -> SweepSpec:
        s = self.require("sweep")
        ode = s.get("ode", {})
        settings = OdeSettings(
            bandwidth_fraction=ode.get("bandwidth_fraction", 1 / 50),
            reservoir=ode.get("reservoir_factor", 5.0),
            v_g=ode.get("group_velocity_m_per_s", DEFAULT_V_G),
            rtol=rtol if rtol is not None else ode.get("rtol", 1e-8),
            frame=ode.get("frame", "common"),
        )
        return SweepSpec(
            base=self.physics(),
            axis1=_axis(s["axis1"]),
            axis2=_axis(s["axis2"]) if "axis2" in s else None,
            mode=s.get("mode", "closed_form"),
            symmetric=s.get("symmetric", True),
            refine=s.get("refine", True),
            ode=settings,
        )

    @property
    def precision(self) -> int:
        return self.section("output").get("precision", 17)

    @property
    def prefix(self) -> str:
        return self.section("output").get("prefix", "run")


def _axis(d: dict) -> SweepAxis:
    return SweepAxis(d["name"], d["start"], d["stop"], d["num"], d.get("scale", "linear"))


def physics_from_dict(d: dict) -> PhysicalParams:
    kwargs = {_PHYSICS_KEYS[k]: v for k, v in d.items()}
    for required in ("kappa", "kappa_1", "kappa_2", "g"):
        if required not in kwargs:
            raise ValidationError(f"physics: missing '{required}_per_s'")
    return PhysicalParams(**kwargs)


def _location(error: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in error.absolute_path)
    return "/" + path


def validate(raw) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{_location(e)}: {e.message}" for e in errors]
        raise ValidationError("invalid config:\n  " + "\n  ".join(lines))


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def from_dict(raw: dict, source: Optional[str] = None) -> RunConfig:
    validate(raw)
    return RunConfig(copy.deepcopy(raw), config_hash(raw), source)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return from_dict(raw, str(path))
