"""Scenario configuration files (JSON, ``"schema": 1``) and the bundled presets.

All times and frequencies are in units of the target linewidth.  Loading a
config validates its structure against a JSON schema and then builds the
scheme, so every inconsistency is reported before any numerics run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .errors import ConfigError, MetashapeError
from .optimize import ParameterSpec
from .scheme import ShapingScheme

SCHEMA_VERSION = 1

_NUMBER = {"type": "number"}
_MODE = {"type": "integer", "minimum": 0}
_SHAPE = {
    "type": "object",
    "required": ["kind", "gamma"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["ExpDecay", "ExpRise", "Gaussian"]},
        "gamma": {"type": "number", "exclusiveMinimum": 0},
        "center": _NUMBER,
        "detuning": _NUMBER,
    },
}

SCHEMA = {
    "type": "object",
    "required": ["schema", "scheme"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "scheme": {
            "type": "object",
            "required": ["s_t", "inputs", "component", "detections", "remaining_mode", "target"],
            "additionalProperties": False,
            "properties": {
                "s_t": {"type": "number", "minimum": 0, "maximum": 1},
                "inputs": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["mode", "shape"],
                        "additionalProperties": False,
                        "properties": {"mode": _MODE, "shape": _SHAPE},
                    },
                },
                "component": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "detections": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["mode", "time"],
                        "additionalProperties": False,
                        "properties": {"mode": _MODE, "time": _NUMBER},
                    },
                },
                "remaining_mode": _MODE,
                "vacuum_modes": {"type": "array", "items": _MODE},
                "splitter_mode": {"oneOf": [_MODE, {"type": "null"}]},
                "target": _SHAPE,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_min": _NUMBER,
                "t_max": _NUMBER,
                "points": {"type": "integer", "minimum": 2},
            },
        },
        "sweeps": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "splitting": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "relative_span": {"type": "number", "exclusiveMinimum": 0},
                        "points": {"type": "integer", "minimum": 2},
                        "reoptimize_times": {"type": "boolean"},
                    },
                },
                "resolution": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "max_ratio": {"type": "number", "exclusiveMinimum": 0},
                        "points": {"type": "integer", "minimum": 2},
                        "method": {"enum": ["mixed", "average"]},
                    },
                },
            },
        },
        "optimizer": {
            "type": "object",
            "required": ["params"],
            "additionalProperties": False,
            "properties": {
                "params": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["name", "bounds"],
                        "additionalProperties": False,
                        "properties": {
                            "name": {"type": "string"},
                            "bounds": {"type": "array", "items": _NUMBER,
                                       "minItems": 2, "maxItems": 2},
                            "initial": _NUMBER,
                            "log": {"type": "boolean"},
                        },
                    },
                },
                "budget": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "p_min": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                "kappa": {"type": "number", "minimum": 0},
            },
        },
    },
}


@dataclass(frozen=True)
class OutputWindow:
    t_min: float
    t_max: float
    points: int = 361


@dataclass(frozen=True)
class OptimizerSpec:
    params: tuple
    budget: int = 20000
    seed: int = 0
    p_min: float | None = None
    kappa: float = 10.0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    description: str
    scheme: ShapingScheme
    output: OutputWindow
    sweeps: dict = field(default_factory=dict)
    optimizer: OptimizerSpec | None = None


def _path(parts):
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _default_window(scheme):
    t = scheme.target
    lo = min([p.shape.center for p in scheme.inputs] + [t.center]) - 3.0
    hi = max([p.shape.center for p in scheme.inputs] + [t.center]) + 6.0
    return lo, hi


def parse_config(data, name="config"):
    """Validate a decoded config document and build a :class:`ScenarioConfig`."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(e.message, where=_path(e.absolute_path))

    try:
        scheme = ShapingScheme.from_dict(data["scheme"], name=data.get("name", name))
    except (MetashapeError, ValueError, KeyError, IndexError) as exc:
        raise ConfigError(str(exc), where="scheme") from None

    out = data.get("output", {})
    lo, hi = _default_window(scheme)
    window = OutputWindow(float(out.get("t_min", lo)), float(out.get("t_max", hi)),
                          int(out.get("points", 361)))
    if not window.t_min < window.t_max:
        raise ConfigError("t_min must be below t_max", where="output")

    optimizer = None
    if "optimizer" in data:
        opt = data["optimizer"]
        params = []
        for i, p in enumerate(opt["params"]):
            where = f"optimizer.params[{i}]"
            try:
                current = scheme.get_param(p["name"])
            except (KeyError, IndexError, ValueError):
                raise ConfigError(f"unknown scheme parameter {p['name']!r}", where=where) from None
            try:
                params.append(ParameterSpec(p["name"], tuple(p["bounds"]),
                                            float(p.get("initial", current)),
                                            bool(p.get("log", False))))
            except ValueError as exc:
                raise ConfigError(str(exc), where=where) from None
        try:
            scheme.with_params({p.name: p.initial for p in params}).validate()
        except (MetashapeError, ValueError) as exc:
            raise ConfigError(f"initial point is invalid: {exc}", where="optimizer.params") from None
        optimizer = OptimizerSpec(tuple(params), int(opt.get("budget", 20000)),
                                  int(opt.get("seed", 0)), opt.get("p_min"),
                                  float(opt.get("kappa", 10.0)))

    return ScenarioConfig(data.get("name", name), data.get("description", ""), scheme,
                          window, dict(data.get("sweeps", {})), optimizer)


def loads_config(text, name="config"):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, where=f"line {exc.lineno}, column {exc.colno}") from None
    return parse_config(data, name)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(exc.strerror or str(exc), where=str(path)) from None
    return loads_config(text, name=str(path))


PRESETS = ("fig2", "fig3_er", "fig3_ed", "opt_ed2gauss")


def preset_text(name):
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files(__package__).joinpath(f"configs/{name}.json").read_text("utf-8")


def load_preset(name):
    return loads_config(preset_text(name), name=name)
