"""Experiment configuration: one YAML file per experiment.

Layout (every section optional; defaults shown by ``default_config``)::

    seed: 0
    dataset:
      path: null            # dataset file; when null a synthetic corpus is generated
      synthetic: {n_images: 200, noise: 0.05, ...}
      split: {kind: holdout, test_fraction: 0.25, n_unseen: 3}
      drop_fraction: 0.0    # positive triples removed from training scenes
    model: {kind: rwfn, hidden: {unary: 500, binary: 1000}, k: 5, fan_in: 7}
    kb: {mode: prior, constraints: [...], constraints_file: null, negative_rate: 1.0}
    training: {epochs: 10000, optimizer: ftrl, ftrl: {learning_rate: 1.0}, ...}
    eval: {tasks: [predicate], n: [100, 50], equivalences: []}

Relative paths are resolved against the directory of the config file.
"""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import yaml

from .errors import ConfigError, InvalidArgument
from .evaluation import TASKS
from .scenes import SyntheticSpec
from .training import TrainingConfig

MODELS = ("rwfn", "rwfn_ws", "ntn")
SPLITS = ("holdout", "zero_shot")


def default_config() -> Dict[str, Any]:
    return {
        "seed": 0,
        "dataset": {
            "path": None,
            "synthetic": {"n_images": 200, "noise": 0.05},
            "split": {"kind": "holdout", "test_fraction": 0.25, "n_unseen": 3},
            "drop_fraction": 0.0,
        },
        "model": {"kind": "rwfn", "hidden": {"unary": 500, "binary": 1000}, "k": 5,
                  "fan_in": 7},
        "kb": {"mode": "prior", "constraints": [], "constraints_file": None,
               "negative_rate": 1.0},
        "training": {},
        "eval": {"tasks": ["predicate"], "n": [100, 50], "equivalences": []},
    }


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in over.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown key {where!r}", field=where)
        if isinstance(base[key], dict) and key not in ("synthetic", "training"):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a mapping", field=where)
            out[key] = _merge(base[key], value, where + ".")
        elif isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a mapping", field=where)
            out[key] = {**base[key], **value}
        else:
            out[key] = value
    return out


def apply_override(config: dict, assignment: str) -> dict:
    """Apply ``a.b.c=value``; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    dotted, raw = assignment.split("=", 1)
    keys = dotted.strip().split(".")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value for {dotted!r}: {exc}", field=dotted) from None
    out = copy.deepcopy(config)
    node = out
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{dotted!r} does not name a nested key", field=dotted)
    node[keys[-1]] = value
    return out


def load_config(path=None, overrides: Iterable[str] = ()) -> Dict[str, Any]:
    """Read, merge with defaults, apply overrides and validate."""
    raw: dict = {}
    base_dir = Path.cwd()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {str(p)!r} not found", field="config")
        try:
            raw = yaml.safe_load(p.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{p}: invalid YAML ({exc})", field="config") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{p}: top level must be a mapping", field="config")
        base_dir = p.resolve().parent
    for item in overrides:
        raw = apply_override(raw, item)
    config = _merge(default_config(), raw)
    config["base_dir"] = str(base_dir)
    validate(config)
    return config


def resolve(config: dict, value: Optional[str]) -> Optional[Path]:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else Path(config.get("base_dir", ".")) / p


def _require(cond: bool, message: str, field: str):
    if not cond:
        raise ConfigError(message, field=field)


def validate(config: dict):
    seed = config["seed"]
    _require(isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2 ** 63,
             f"seed must be a non-negative integer, got {seed!r}", "seed")

    ds = config["dataset"]
    if ds["path"] is not None:
        p = resolve(config, ds["path"])
        _require(p.is_file(), f"dataset file {str(p)!r} not found", "dataset.path")
    else:
        try:
            SyntheticSpec.from_dict(ds["synthetic"])
        except (TypeError, InvalidArgument) as exc:
            raise ConfigError(f"invalid synthetic spec: {exc}", field="dataset.synthetic") from None
    split = ds["split"]
    _require(split["kind"] in SPLITS, f"split kind must be one of {SPLITS}", "dataset.split.kind")
    tf = split["test_fraction"]
    _require(isinstance(tf, (int, float)) and 0 < tf < 1, "test_fraction must lie in (0, 1)",
             "dataset.split.test_fraction")
    _require(isinstance(split["n_unseen"], int) and split["n_unseen"] >= 1,
             "n_unseen must be a positive integer", "dataset.split.n_unseen")
    df = ds["drop_fraction"]
    _require(isinstance(df, (int, float)) and 0 <= df < 1, "drop_fraction must lie in [0, 1)",
             "dataset.drop_fraction")

    model = config["model"]
    _require(model["kind"] in MODELS, f"model kind must be one of {MODELS}", "model.kind")
    for arity in ("unary", "binary"):
        b = model["hidden"][arity]
        _require(isinstance(b, int) and b >= 1, "hidden size must be a positive integer",
                 f"model.hidden.{arity}")
    _require(isinstance(model["k"], int) and model["k"] >= 1, "k must be a positive integer",
             "model.k")
    _require(isinstance(model["fan_in"], int) and model["fan_in"] >= 1,
             "fan_in must be a positive integer", "model.fan_in")

    kb = config["kb"]
    _require(kb["mode"] in ("expl", "prior"), "kb mode must be 'expl' or 'prior'", "kb.mode")
    _require(isinstance(kb["constraints"], list) and all(isinstance(c, str) for c in kb["constraints"]),
             "constraints must be a list of strings", "kb.constraints")
    if kb["constraints_file"] is not None:
        p = resolve(config, kb["constraints_file"])
        _require(p.is_file(), f"constraints file {str(p)!r} not found", "kb.constraints_file")
    rate = kb["negative_rate"]
    _require(isinstance(rate, (int, float)) and 0 < rate <= 1, "negative_rate must lie in (0, 1]",
             "kb.negative_rate")

    try:
        training_config(config).validate()
    except TypeError as exc:
        raise ConfigError(f"invalid training section: {exc}", field="training") from None
    except InvalidArgument as exc:
        raise ConfigError(str(exc), field="training") from None

    ev = config["eval"]
    _require(isinstance(ev["tasks"], list) and ev["tasks"] and all(t in TASKS for t in ev["tasks"]),
             f"tasks must be a non-empty list drawn from {TASKS}", "eval.tasks")
    _require(isinstance(ev["n"], list) and ev["n"]
             and all(isinstance(n, int) and n > 0 for n in ev["n"]),
             "n must be a non-empty list of positive integers", "eval.n")
    _require(isinstance(ev["equivalences"], list)
             and all(isinstance(e, (list, tuple)) and len(e) == 2 for e in ev["equivalences"]),
             "equivalences must be a list of predicate pairs", "eval.equivalences")


def training_config(config: dict) -> TrainingConfig:
    """Training section; the optimiser defaults to ftrl for RWFN and rmsprop for NTN."""
    section = dict(config["training"])
    section.setdefault("optimizer", "rmsprop" if config["model"]["kind"] == "ntn" else "ftrl")
    section.setdefault("seed", config["seed"])
    return TrainingConfig.from_dict(section)


def public(config: dict) -> dict:
    """The config without machine-local keys; this is what gets hashed."""
    return {k: v for k, v in config.items() if k != "base_dir"}
