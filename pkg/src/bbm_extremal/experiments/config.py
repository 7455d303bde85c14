"""Experiment configuration: YAML files validated against a JSON schema.

Resolution order: built-in defaults, then the config file, then ``--set``
overrides and the dedicated flags (``--seed``, ``--replicas``, ...).
Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from pathlib import Path

import jsonschema
import yaml

OUT_ENV = "BBM_EXTREMAL_OUT"

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nn_int = {"type": "integer", "minimum": 0}
_opt_num = {"type": ["number", "null"]}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}


def _obj(props: dict) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False}


_phi = _obj({"family": {"enum": ["box", "tent", "bump"]}, "lo": _num, "hi": _num, "height": _num,
             "mollify": _pos})

SCHEMA = _obj({
    "experiment": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    "replicas": _nn_int,
    "out": {"type": "string"},
    "jobs": {"type": "integer", "minimum": 1},
    "format": {"enum": ["csv", "json"]},
    "engine": _obj({
        "horizon": {"type": "number", "minimum": 0},
        "drift": _num,
        "prune_gap": {"type": ["number", "null"], "minimum": 4},
        "population_cap": {"type": ["integer", "null"], "minimum": 1},
        "checkpoint_times": {"type": "array", "items": _num},
        "record_genealogy": {"type": "boolean"},
        "record_paths": {"type": "boolean"},
        "starts": {"type": "array", "items": _num, "minItems": 1},
        "slice_dt": _pos,
        "save_window": _opt_num,
        "binary": {"type": "boolean"},
    }),
    "fkpp": _obj({
        "x_min": _num, "x_max": _num, "dx": _pos, "dt": _pos,
        "times": {"type": "array", "items": _pos, "minItems": 1},
        "centering": {"enum": ["by_median", "by_m"]},
        "extrapolate_residual": {"type": "boolean"},
        "tail_windows": {"type": "array", "items": _pair},
        "phi": {"anyOf": [_phi, {"type": "null"}]},
        "delta": _opt_num,
        "laplace_times": {"type": "array", "items": _pos, "minItems": 2},
    }),
    "martingale": _obj({
        "horizon": _pos,
        "compare_horizon": _opt_num,
        "prune_gap": {"type": ["number", "null"], "minimum": 4},
    }),
    "sampler": _obj({
        "t": {"type": "number", "minimum": 0},
        "z": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "z_file": {"type": ["string", "null"]},
        "z_horizon": _pos,
        "mode": {"enum": ["full", "thinned", "maxima"]},
        "level": _opt_num,
        "c1": _pos, "c2": _pos,
        "prune_gap": {"type": ["number", "null"], "minimum": 4},
        "a": _pos, "b": _num,
        "method": {"enum": ["spine", "rejection"]},
        "budget": {"type": "integer", "minimum": 1},
        "y": _num,
        "intervals": {"type": "array", "items": _pair},
        "min_atoms": _nn_int,
        "z_min": _pos, "z_max": _pos,
    }),
    "compare": _obj({
        "t": _pos,
        "level": _num,
        "ks_threshold": _pos,
        "ci_level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "panel": {"type": "array", "items": _phi},
        "mixture": {"type": "boolean"},
        "z_replicas": _nn_int,
    }),
    "genealogy": _obj({
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "D": _pair,
        "r_values": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "n_checkpoints": {"type": "integer", "minimum": 2},
    }),
    "superposition": _obj({
        "starts": {"type": "array", "items": _num, "minItems": 1},
        "t": _pos,
    }),
    "report": _obj({
        "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 10}},
        "run_acceptance": {"type": "boolean"},
    }),
})

DEFAULTS = {
    "seed": 0,
    "replicas": 1000,
    "jobs": 1,
    "format": "csv",
    "engine": {"horizon": 10.0, "drift": 0.0, "prune_gap": 8.0, "population_cap": 10_000_000,
               "checkpoint_times": [], "record_genealogy": False, "record_paths": False,
               "starts": [0.0], "slice_dt": 0.5, "save_window": None, "binary": True},
    "fkpp": {"x_min": -40.0, "x_max": 40.0, "dx": 0.02, "dt": 0.01, "times": [50.0, 100.0],
             "centering": "by_median", "extrapolate_residual": True,
             "tail_windows": [[5.0, 8.0], [6.0, 9.0]], "phi": None, "delta": None,
             "laplace_times": [100.0, 300.0]},
    "martingale": {"horizon": 10.0, "compare_horizon": None, "prune_gap": 8.0},
    "sampler": {"t": 10.0, "z": None, "z_file": None, "z_horizon": 10.0, "mode": "thinned", "level": -2.0,
                "c1": 0.3, "c2": 3.5, "prune_gap": 6.0, "a": 0.7, "b": 0.0, "method": "spine",
                "budget": 10_000, "y": 0.0, "intervals": [[0.0, 1.0], [1.0, 2.0]], "min_atoms": 50,
                "z_min": 0.01, "z_max": 6.0},
    "compare": {"t": 10.0, "level": -2.0, "ks_threshold": 0.05, "ci_level": 0.95, "panel": [],
                "mixture": True, "z_replicas": 1000},
    "genealogy": {"alpha": 0.45, "D": [-3.0, 3.0], "r_values": [1.0, 2.0, 3.0], "n_checkpoints": 57},
    "superposition": {"starts": [0.0, 0.0], "t": 10.0},
    "report": {"criteria": [], "run_acceptance": False},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as e:
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {e.message}") from None


def parse_override(text: str) -> tuple[list, object]:
    """``section.key=value`` with the value parsed as YAML."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    return key.strip().split("."), yaml.safe_load(raw)


def load_config(path=None, overrides=(), flags: dict | None = None, command_defaults: dict | None = None) -> dict:
    user = {}
    if path is not None:
        with open(path) as fh:
            user = yaml.safe_load(fh) or {}
        if not isinstance(user, dict):
            raise ConfigError("config file must hold a mapping")
        validate(user)
    cfg = _merge(_merge(DEFAULTS, command_defaults or {}), user)
    for text in overrides:
        keys, value = parse_override(text)
        node = cfg
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value
    for k, v in (flags or {}).items():
        if v is not None:
            cfg[k] = v
    if not cfg.get("out"):
        cfg["out"] = os.environ.get(OUT_ENV, "runs")
    validate(cfg)
    return cfg


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical JSON form, ignoring the output location and worker count."""
    clean = {k: v for k, v in cfg.items() if k not in ("out", "jobs")}
    return hashlib.sha256(json.dumps(clean, sort_keys=True).encode()).hexdigest()


def dump_schema(path) -> None:
    Path(path).write_text(json.dumps(SCHEMA, indent=2))
