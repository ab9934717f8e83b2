"""JSON run configurations: schema, defaults and construction of the run objects.

A run config names two systems, an objective, a search space, an optimizer,
a budget, a seed and an output directory.  Relative file paths are resolved
against the directory of the config file.  See ``README.md`` for examples.
"""
from __future__ import annotations

import copy
import hashlib
import json
import secrets
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .conformance import build_pwc_formula
from .falsify import Conformance, Formula, OptimizerConfig, SearchSpace
from .monitor import Kind, parse
from .systems import (
    AutomatonSystem,
    ExternalProcessSystem,
    ReplaySystem,
    load_automaton,
    make_mutant,
    mutation_from_dict,
    nav_automaton,
    nav_input_box,
    offset_system,
)
from .tss import read_csv


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "budget": 100,
    "output": "out",
    "optimizer": {
        "method": "sa",
        "initial_temperature": None,
        "cooling": 0.97,
        "step_fraction": 0.1,
        "restarts": 0,
        "workers": 1,
    },
    "space": {"J": 100, "n_control_points": 1, "interpolation": "pc"},
    "system": {"dt": 0.05, "method": "rk4", "protocol": "stdout", "timeout": 60.0},
    "objective": {"kind": "spatial"},
    "degree": {"parameter": "eps", "K": 20, "lower": 0.0, "start": 1.0, "max_doublings": 30},
    "runs": 20,
}

_num = {"type": "number"}
_vec = {"type": "array", "items": _num}
_kind = {"enum": ["spatial", "temporal"]}

MUTATION_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["identity", "dynamics_scale", "guard_offset"]},
        "factor": {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                             {"type": "object", "additionalProperties": _num}]},
        "axis": {"enum": ["horizontal", "vertical"]},
        "delta": _num,
    },
    "additionalProperties": False,
}

SYSTEM_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["automaton", "replay", "external"]},
        "file": {"type": "string"},
        "builtin": {"enum": ["nav4"]},
        "mutation": MUTATION_SCHEMA,
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "method": {"enum": ["rk4", "euler"]},
        "projection": {"type": "array", "items": _vec},
        "trace": {"type": "string"},
        "command": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "protocol": {"enum": ["stdout", "file"]},
        "timeout": {"type": "number", "exclusiveMinimum": 0},
        "dim_out": {"type": "integer", "minimum": 1},
        "offset": _vec,
    },
    "additionalProperties": False,
}

OBJECTIVE_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["conformance", "formula", "pwc"]},
        "tau": {"type": "number", "exclusiveMinimum": 0},
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "formula": {"type": "string"},
        "D": {"type": "number", "exclusiveMinimum": 0},
        "kind": _kind,
    },
    "additionalProperties": False,
}

SPACE_SCHEMA = {
    "type": "object",
    "required": ["T"],
    "properties": {
        "T": {"type": "number", "exclusiveMinimum": 0},
        "J": {"type": "integer", "minimum": 0},
        "h0_low": _vec,
        "h0_high": _vec,
        "input_low": _vec,
        "input_high": _vec,
        "n_control_points": {"type": "integer", "minimum": 1},
        "interpolation": {"enum": ["pc", "pl"]},
    },
    "additionalProperties": False,
}

OPTIMIZER_SCHEMA = {
    "type": "object",
    "properties": {
        "method": {"enum": ["sa", "uniform"]},
        "initial_temperature": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "cooling": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "step_fraction": {"type": "number", "exclusiveMinimum": 0},
        "restarts": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

_common = {
    "objective": OBJECTIVE_SCHEMA,
    "space": SPACE_SCHEMA,
    "optimizer": OPTIMIZER_SCHEMA,
    "budget": {"type": "integer", "minimum": 1},
    "seed": {"type": "integer", "minimum": 0},
    "output": {"type": "string"},
    "base_dir": {"type": "string"},
}

RUN_SCHEMA = {
    "type": "object",
    "required": ["systems", "objective", "space"],
    "properties": {
        "systems": {
            "type": "object",
            "required": ["model", "impl"],
            "properties": {"model": SYSTEM_SCHEMA, "impl": SYSTEM_SCHEMA},
            "additionalProperties": False,
        },
        "degree": {
            "type": "object",
            "properties": {
                "parameter": {"enum": ["eps", "tau"]},
                "fixed": {"type": "number", "exclusiveMinimum": 0},
                "K": {"type": "integer", "minimum": 1},
                "lower": {"type": "number", "minimum": 0},
                "upper": {"type": "number", "exclusiveMinimum": 0},
                "start": {"type": "number", "exclusiveMinimum": 0},
                "max_doublings": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        **_common,
    },
    "additionalProperties": False,
}

CAMPAIGN_SCHEMA = {
    "type": "object",
    "required": ["base", "mutants", "objective", "space"],
    "properties": {
        "base": SYSTEM_SCHEMA,
        "mutants": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "mutation"],
                "properties": {"name": {"type": "string"}, "mutation": MUTATION_SCHEMA},
                "additionalProperties": False,
            },
        },
        "runs": {"type": "integer", "minimum": 1},
        **_common,
    },
    "additionalProperties": False,
}


def validate(cfg: dict, schema: dict):
    """Raise ConfigError listing every violation with its JSON path."""
    errors = sorted(jsonschema.Draft7Validator(schema).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        lines = [f"at /{'/'.join(str(p) for p in e.path)}: {e.message}" for e in errors]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))


def merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def with_defaults(cfg: dict, campaign: bool = False) -> dict:
    """Fill in defaults (and a fresh seed when none is given)."""
    out = copy.deepcopy(cfg)
    for key in ("budget", "output"):
        out.setdefault(key, DEFAULTS[key])
    out["optimizer"] = merge(DEFAULTS["optimizer"], out.get("optimizer", {}))
    out["space"] = merge(DEFAULTS["space"], out["space"])
    out["objective"] = merge(DEFAULTS["objective"], out["objective"])
    systems = [out["base"]] if campaign else [out["systems"]["model"], out["systems"]["impl"]]
    for s in systems:
        if s["type"] == "automaton":
            s.setdefault("dt", DEFAULTS["system"]["dt"])
            s.setdefault("method", DEFAULTS["system"]["method"])
        elif s["type"] == "external":
            for k in ("protocol", "timeout"):
                s.setdefault(k, DEFAULTS["system"][k])
    if campaign:
        out.setdefault("runs", DEFAULTS["runs"])
    elif "degree" in out:
        out["degree"] = merge(DEFAULTS["degree"], out["degree"])
    if "seed" not in out:
        out["seed"] = secrets.randbits(31)
    return out


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON of everything except the output location."""
    body = {k: v for k, v in cfg.items() if k != "output"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass
class Loaded:
    cfg: dict  # validated, defaults filled in, ``base_dir`` absolute
    base_dir: Path
    seed_generated: bool


def load(path: str | Path, campaign: bool = False, overrides: dict | None = None) -> Loaded:
    """Read a config file, or the ``config`` recorded in a run manifest."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if isinstance(raw, dict) and "config_sha256" in raw and "config" in raw:
        raw = raw["config"]
    if overrides:
        raw = merge(raw, {k: v for k, v in overrides.items() if v is not None})
    validate(raw, CAMPAIGN_SCHEMA if campaign else RUN_SCHEMA)
    base_dir = Path(raw.get("base_dir", path.parent)).resolve()
    cfg = with_defaults(raw, campaign)
    cfg["base_dir"] = str(base_dir)
    return Loaded(cfg, base_dir, "seed" not in raw)


# ------------------------------------------------------------ construction


def _resolve(base_dir: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base_dir / q


def build_automaton(spec: dict, base_dir: Path):
    if "builtin" in spec:
        aut = nav_automaton()
    elif "file" in spec:
        aut = load_automaton(_resolve(base_dir, spec["file"]))
    else:
        raise ConfigError("automaton system needs 'builtin' or 'file'")
    if "mutation" in spec:
        aut = make_mutant(aut, mutation_from_dict(spec["mutation"]))
    return aut


def build_system(spec: dict, base_dir: Path):
    kind = spec["type"]
    if kind == "automaton":
        sut = AutomatonSystem(
            build_automaton(spec, base_dir), spec["dt"], spec["method"], spec.get("projection")
        )
    elif kind == "replay":
        if "trace" not in spec:
            raise ConfigError("replay system needs 'trace'")
        sut = ReplaySystem(read_csv(_resolve(base_dir, spec["trace"])))
    else:
        if "command" not in spec or "dt" not in spec or "dim_out" not in spec:
            raise ConfigError("external system needs 'command', 'dt' and 'dim_out'")
        sut = ExternalProcessSystem(
            spec["command"], spec["dt"], spec["dim_out"], spec["protocol"], spec["timeout"],
            str(base_dir),
        )
    if "offset" in spec:
        sut = offset_system(sut, spec["offset"])
    return sut


def build_objective(spec: dict, T: float):
    kind = Kind(spec["kind"])
    t = spec["type"]
    if t == "conformance":
        if "tau" not in spec or "eps" not in spec:
            raise ConfigError("conformance objective needs 'tau' and 'eps'")
        return Conformance(spec["tau"], spec["eps"], kind)
    if t == "formula":
        if "formula" not in spec:
            raise ConfigError("formula objective needs 'formula'")
        return Formula(parse(spec["formula"]), kind)
    if "D" not in spec:
        raise ConfigError("pwc objective needs 'D'")
    return Formula(build_pwc_formula(spec["D"], T), kind)


def build_space(spec: dict, system_spec: dict, base_dir: Path) -> SearchSpace:
    lo, hi = spec.get("h0_low"), spec.get("h0_high")
    ulo, uhi = spec.get("input_low"), spec.get("input_high")
    if system_spec["type"] == "automaton":
        aut = build_automaton(system_spec, base_dir)
        if lo is None and hi is None:
            lo, hi = aut.init.low, aut.init.high
        if ulo is None and uhi is None and aut.n_inputs:
            if system_spec.get("builtin") != "nav4":
                raise ConfigError("space needs input_low/input_high for this automaton")
            ulo, uhi = nav_input_box()
    if lo is None or hi is None:
        raise ConfigError("space needs h0_low and h0_high")
    return SearchSpace(
        np.asarray(lo, dtype=float), np.asarray(hi, dtype=float), spec["T"], spec["J"],
        None if ulo is None else np.asarray(ulo, dtype=float),
        None if uhi is None else np.asarray(uhi, dtype=float),
        spec["n_control_points"], spec["interpolation"],
    )


def build_optimizer(spec: dict) -> OptimizerConfig:
    return OptimizerConfig(**spec)
