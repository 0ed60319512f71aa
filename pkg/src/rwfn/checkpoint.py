"""JSON checkpoints for grounded theories.

Encoder weights are never stored: an encoder is fully determined by its
seed and dimensions, so loading regenerates it bit-identically.  Learnable
parameters are written as nested lists of floats, which round-trip exactly
through Python's shortest-repr float formatting.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .encoders import build_encoder
from .errors import CompatibilityError, ParseError
from .groundings import ConstantGrounding, GroundedTheory, NtnGrounding, RwfnGrounding
from .knowledge_base import Signature
from .scenes import FeatureSchema, SceneFeatures

FORMAT_NAME = "rwfn-checkpoint"
FORMAT_VERSION = 1


def config_hash(config: Optional[dict]) -> str:
    """SHA-256 of the canonical JSON form of ``config``."""
    text = json.dumps(config or {}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _schema_dict(schema: FeatureSchema) -> dict:
    return {"classes": list(schema.classes), "geometry_dim": schema.geometry_dim,
            "joint_dim": schema.joint_dim, "log_ratio_clamp": schema.log_ratio_clamp}


def checkpoint_dict(theory: GroundedTheory, config: Optional[dict] = None,
                    extra: Optional[dict] = None) -> dict:
    encoders, enc_index, groundings = [], {}, {}
    for pred in theory.signature.predicates:
        g = theory.groundings[pred]
        entry = {"kind": g.kind, "arity": g.arity}
        if isinstance(g, RwfnGrounding):
            key = id(g.encoder)
            if key not in enc_index:
                enc_index[key] = len(encoders)
                encoders.append({"arity": g.arity, **g.encoder.describe()})
            entry["encoder"] = enc_index[key]
        elif isinstance(g, ConstantGrounding):
            entry["value"] = g.value
            entry["input_dim"] = g.input_dim
        entry["params"] = {name: np.asarray(a).tolist() for name, a in g.params().items()}
        groundings[pred] = entry
    schema = theory.features.schema if theory.features is not None else None
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "model": theory.model,
        "signature": {"unary": list(theory.signature.unary),
                      "binary": list(theory.signature.binary)},
        "schema": _schema_dict(schema) if schema is not None else None,
        "encoders": encoders,
        "groundings": groundings,
        "trained": sorted(theory.trained),
        "config_hash": config_hash(config),
        "config": config,
        "extra": extra or {},
    }


def save_checkpoint(path, theory: GroundedTheory, config: Optional[dict] = None,
                    extra: Optional[dict] = None):
    """Write ``theory`` as JSON; ``extra`` holds caller data such as the frequency prior."""
    text = json.dumps(checkpoint_dict(theory, config, extra), sort_keys=True)
    Path(path).write_text(text + "\n")


def _grounding(entry: dict, encoders: list, shared: dict):
    kind, arity, params = entry["kind"], int(entry["arity"]), entry.get("params", {})
    if kind == "rwfn":
        idx = int(entry["encoder"])
        if idx not in shared:
            spec = encoders[idx]
            shared[idx] = build_encoder(int(spec["seed"]), int(spec["input_dim"]),
                                        int(spec["hidden"]), int(spec["fan_in"]))
        return RwfnGrounding(shared[idx], arity, params["beta"])
    if kind == "ntn":
        return NtnGrounding(params["u"], params["W"], params["V"], params["b"], arity)
    if kind == "constant":
        return ConstantGrounding(float(entry["value"]), int(entry["input_dim"]), arity)
    raise ParseError(f"unknown grounding kind {kind!r}")


def theory_from_dict(doc: dict, signature: Optional[Signature] = None) -> GroundedTheory:
    """Rebuild a theory; ``signature`` (if given) must declare the same predicates."""
    if doc.get("format") != FORMAT_NAME:
        raise ParseError(f"not a checkpoint: format {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise CompatibilityError(f"unsupported checkpoint version {doc.get('version')!r}")
    stored = Signature(tuple(doc["signature"]["unary"]), tuple(doc["signature"]["binary"]))
    if signature is not None and not stored.compatible_with(signature):
        raise CompatibilityError(
            f"checkpoint predicates {stored.predicates} do not match dataset {signature.predicates}")
    sig = Signature(stored.unary, stored.binary,
                    dict(signature.images) if signature is not None else {})
    encoders, shared = doc.get("encoders", []), {}
    try:
        groundings = {pred: _grounding(doc["groundings"][pred], encoders, shared)
                      for pred in sig.predicates}
    except KeyError as exc:
        raise ParseError(f"checkpoint is missing field {exc}") from None
    features = None
    if doc.get("schema"):
        s = doc["schema"]
        schema = FeatureSchema(tuple(s["classes"]), int(s["geometry_dim"]), int(s["joint_dim"]),
                               float(s["log_ratio_clamp"]))
        features = SceneFeatures([], schema)
    return GroundedTheory(sig, groundings, features, None, doc.get("model", "rwfn"),
                          set(doc.get("trained", [])))


def read_checkpoint(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None


def load_checkpoint(path, signature: Optional[Signature] = None,
                    expected_config: Optional[dict] = None) -> GroundedTheory:
    doc = read_checkpoint(path)
    if expected_config is not None and doc.get("config_hash") != config_hash(expected_config):
        raise CompatibilityError("checkpoint was trained with a different configuration")
    return theory_from_dict(doc, signature)
