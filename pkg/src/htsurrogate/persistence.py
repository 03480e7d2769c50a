"""Versioned JSON model files for both surrogate kinds.

Floats are written with ``repr``, the shortest string that parses back to the
same double, so ``load(save(m))`` predicts bit-identically.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .dataset import NormStats
from .errors import DataError
from .grnn import GrnnConfig, GrnnModel
from .mlfn import MlfnConfig, MlfnModel

FORMAT = "htsurrogate-model"
VERSION = 1


def _floats(a):
    return np.asarray(a, dtype=float).tolist()


def to_dict(model) -> dict:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "kind": model.kind,
        "feature_names": list(model.feature_names),
        "target_name": model.target_name,
        "schema_tag": model.schema_tag,
        "norm": model.norm.to_dict() if model.norm is not None else None,
    }
    if isinstance(model, MlfnModel):
        doc["config"] = model.config.to_dict()
        doc["params"] = {
            "hidden_weights": _floats(model.hidden_weights),
            "hidden_biases": _floats(model.hidden_biases),
            "output_weights": _floats(model.output_weights),
            "output_bias": float(model.output_bias),
        }
    elif isinstance(model, GrnnModel):
        doc["config"] = model.config.to_dict()
        doc["exemplars"] = {
            "features": _floats(model.features),
            "targets": _floats(model.targets),
        }
    else:
        raise DataError(f"cannot serialize {type(model).__name__}")
    return doc


def dumps(model) -> str:
    return json.dumps(to_dict(model), indent=1) + "\n"


def digest(model) -> str:
    return hashlib.sha256(dumps(model).encode()).hexdigest()


def from_dict(doc: dict):
    if doc.get("format") != FORMAT:
        raise DataError("not a model file (missing format marker)")
    if doc.get("version") != VERSION:
        raise DataError(f"unsupported model file version {doc.get('version')!r}")
    norm = NormStats.from_dict(doc["norm"]) if doc.get("norm") else None
    common = dict(
        feature_names=tuple(doc["feature_names"]),
        target_name=doc.get("target_name", "target"),
        schema_tag=doc.get("schema_tag"),
    )
    kind = doc.get("kind")
    try:
        if kind == "mlfn":
            p = doc["params"]
            return MlfnModel(
                np.array(p["hidden_weights"], dtype=float).reshape(
                    doc["config"]["n_hidden"], doc["config"]["n_inputs"]
                ),
                np.array(p["hidden_biases"], dtype=float),
                np.array(p["output_weights"], dtype=float),
                float(p["output_bias"]),
                MlfnConfig.from_dict(doc["config"]),
                norm,
                **common,
            )
        if kind == "grnn":
            ex = doc["exemplars"]
            return GrnnModel(
                np.array(ex["features"], dtype=float).reshape(len(ex["targets"]), -1),
                np.array(ex["targets"], dtype=float),
                float(doc["config"]["sigma"]),
                norm,
                **common,
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"malformed model file: {exc}") from None
    raise DataError(f"unknown model kind {kind!r}")


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON: {exc}") from None
    return from_dict(doc)


def save(model, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def load(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such model file")
    return loads(path.read_text(encoding="utf-8"))


CONFIG_FORMAT = "htsurrogate-config"


def config_to_dict(config, extra: dict | None = None) -> dict:
    kind = "mlfn" if isinstance(config, MlfnConfig) else "grnn" if isinstance(config, GrnnConfig) else None
    if kind is None:
        raise DataError(f"cannot serialize configuration {config!r}")
    doc = {"format": CONFIG_FORMAT, "version": VERSION, "kind": kind, "config": config.to_dict()}
    if extra:
        doc.update(extra)
    return doc


def save_config(config, path, extra: dict | None = None) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config, extra), indent=1) + "\n", encoding="utf-8")


def load_config(path):
    """Read a configuration file written by ``save_config``; returns ``(config, doc)``."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such config file")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    if doc.get("format") != CONFIG_FORMAT:
        raise DataError(f"{path}: not a configuration file")
    try:
        if doc["kind"] == "mlfn":
            return MlfnConfig.from_dict(doc["config"]), doc
        if doc["kind"] == "grnn":
            return GrnnConfig.from_dict(doc["config"]), doc
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: malformed configuration: {exc}") from None
    raise DataError(f"{path}: unknown model kind {doc.get('kind')!r}")
