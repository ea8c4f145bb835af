"""JSON run configuration: schema, validation and builders."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from .kernels import GridSpec, KernelSpec
from .kinetic import DensityPair
from .model import ModelParams

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_NONNEG_PAIR = {"type": "array", "items": _NONNEG, "minItems": 2, "maxItems": 2}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


KERNEL = _obj({
    "family": {"enum": ["tophat", "gaussian", "exponential"]},
    "amplitude": _NONNEG,
    "range": _POS,
}, ["family", "amplitude", "range"])

INITIAL = {
    "oneOf": [
        _obj({"kind": {"const": "constant"}, "values": _NONNEG_PAIR}, ["kind", "values"]),
        _obj({
            "kind": {"const": "cosine"},
            "mean": _NONNEG_PAIR,
            "amplitude": _PAIR,
            "mode": {"oneOf": [{"type": "integer"}, {"type": "array", "items": {"type": "integer"}}]},
        }, ["kind", "mean", "amplitude", "mode"]),
    ]
}

SCHEMA = _obj({
    "model": _obj({
        "dimension": {"enum": [1, 2]},
        "a0": KERNEL, "a1": KERNEL, "phi0": KERNEL, "phi1": KERNEL,
    }, ["dimension", "a0", "a1", "phi0", "phi1"]),
    "grid": _obj({
        "box_length": {"oneOf": [_POS, {"type": "array", "items": _POS, "minItems": 1, "maxItems": 2}]},
        "points": {"oneOf": [_POS_INT, {"type": "array", "items": _POS_INT, "minItems": 1, "maxItems": 2}]},
    }, ["box_length", "points"]),
    "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    "out_dir": {"type": "string"},
    "kinetic": _obj({
        "t_end": _NONNEG, "dt": _POS, "method": {"enum": ["rk4", "picard"]},
        "picard_tol": _POS, "picard_max_iter": _POS_INT, "snapshot_every": _POS,
        "initial": INITIAL,
    }, ["t_end", "dt", "initial"]),
    "simulate": _obj({
        "t_end": _NONNEG, "snapshot_every": _POS, "intensity0": _NONNEG, "intensity1": _NONNEG,
        "replicas": _POS_INT,
    }, ["t_end", "intensity0", "intensity1"]),
    "stationary": _obj({
        "Ctilde0": _POS, "Ctilde1": _POS, "scan_points": _POS_INT,
    }, ["Ctilde0", "Ctilde1"]),
    "stability": _obj({
        "C0": _NONNEG, "C1": _NONNEG, "Ctilde0": _POS, "Ctilde1": _POS,
        "p_max": _POS, "points": {"type": "integer", "minimum": 2},
    }),
    "meso": _obj({
        "epsilons": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}, "minItems": 1},
        "replicas": _POS_INT, "t_end": _NONNEG, "snapshot_every": _POS,
        "density_points": {"oneOf": [_POS_INT, {"type": "array", "items": _POS_INT}]},
        "kinetic_dt": _POS, "particle_budget": _POS_INT, "bootstrap": {"type": "integer", "minimum": 2},
        "initial": INITIAL,
    }, ["initial"]),
    "bounds": _obj({
        "theta": _NUM, "theta_prime": _NUM, "theta_dd": _NUM, "alpha": _POS, "c": _NONNEG,
    }, ["theta"]),
})

COMMANDS = ("kinetic", "simulate", "stationary", "stability", "meso", "bounds")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass
class RunConfig:
    raw: dict
    model: ModelParams | None = None
    grid: GridSpec | None = None
    seed: int = 0
    out_dir: str | None = None
    tasks: dict = field(default_factory=dict)


def validate(raw: dict) -> None:
    errors = sorted(Draft202012Validator(SCHEMA).iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        # oneOf failures are reported at the branch point; use the deepest context
        err = errors[0]
        if err.context:
            err = max(err.context, key=lambda e: len(e.absolute_path))
        raise ConfigError(err.json_path, err.message)


def parse(raw: dict, command: str) -> RunConfig:
    """Validate ``raw`` for ``command`` and build typed objects."""
    if command not in COMMANDS:
        raise ConfigError("$", f"unknown command {command!r}")
    validate(raw)
    cfg = RunConfig(raw, seed=int(raw.get("seed", 0)), out_dir=raw.get("out_dir"))
    cfg.tasks = {k: raw[k] for k in COMMANDS if k in raw}
    if command not in raw:
        raise ConfigError(f"$.{command}", f"missing '{command}' block")
    if "model" in raw:
        try:
            cfg.model = ModelParams.from_dict(raw["model"])
        except ValueError as exc:
            raise ConfigError("$.model", str(exc)) from exc
    needs_model = command != "bounds" or not {"alpha", "c"} <= set(raw["bounds"])
    if needs_model and cfg.model is None:
        raise ConfigError("$.model", "model block required for this command")
    if "grid" in raw:
        dim = cfg.model.dimension if cfg.model else None
        if dim is None:
            bl = raw["grid"]["box_length"]
            dim = len(bl) if isinstance(bl, list) else 1
        try:
            cfg.grid = GridSpec.from_dict(raw["grid"], dimension=dim)
        except ValueError as exc:
            raise ConfigError("$.grid", str(exc)) from exc
    if command in ("kinetic", "simulate", "meso") and cfg.grid is None:
        raise ConfigError("$.grid", "grid block required for this command")
    if command == "stability":
        blk = raw["stability"]
        if not ({"C0", "C1"} <= set(blk) or {"Ctilde0", "Ctilde1"} <= set(blk)):
            raise ConfigError("$.stability", "give either C0/C1 or Ctilde0/Ctilde1")
    return cfg


def load(path: str | Path, command: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("$", f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("$", "top level must be an object")
    return parse(raw, command)


def initial_density(block: dict, grid: GridSpec) -> DensityPair:
    if block["kind"] == "constant":
        c0, c1 = block["values"]
        return DensityPair.constant(grid, c0, c1)
    mode = np.atleast_1d(block["mode"])
    if len(mode) == 1:
        mode = np.repeat(mode, grid.dimension)
    phase = sum(2 * math.pi * m * x / L for m, x, L in zip(mode, grid.coordinates(), grid.box_length))
    wave = np.cos(phase)
    rho = [block["mean"][i] + block["amplitude"][i] * wave for i in (0, 1)]
    if min(r.min() for r in rho) < 0:
        raise ConfigError("$.initial", "cosine initial data must stay nonnegative")
    return DensityPair(grid, rho[0], rho[1])
