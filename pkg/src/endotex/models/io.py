"""Versioned JSON persistence for every model type.

Plain ``json`` round-trips Python floats exactly (shortest-repr encoding), so
a saved model reproduces bit-identical predictions after loading.  Composite
models (bagging, voting, stacking, cascades) nest their members as payload
documents of the same format.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import IoFailure, SchemaMismatch, UnreadableFile
from .ensemble import BaggedModel, StackedModel, VotingModel
from .linear import LogisticModel
from .mlp import MlpModel
from .trees import DecisionTree, Forest

MODEL_FORMAT_VERSION = 1

# type tag -> (class, payload decoder); simple models decode via from_dict
_REGISTRY: dict[str, tuple[type, callable]] = {}
_TAGS: dict[type, str] = {}


def register_model(tag: str, cls: type, decoder) -> None:
    _REGISTRY[tag] = (cls, decoder)
    _TAGS[cls] = tag


register_model("tree", DecisionTree, DecisionTree.from_dict)
register_model("forest", Forest, Forest.from_dict)
register_model("logistic", LogisticModel, LogisticModel.from_dict)
register_model("mlp", MlpModel, MlpModel.from_dict)


def _bagged_to_dict(model: BaggedModel) -> dict:
    return {
        "vote": model.vote,
        "classes": model.classes_.tolist(),
        "members": [model_to_dict(m) for m in model.members],
    }


def _bagged_from_dict(data: dict) -> BaggedModel:
    return BaggedModel(
        members=[model_from_dict(m) for m in data["members"]],
        classes_=np.array(data["classes"]),
        vote=data["vote"],
    )


def _voting_to_dict(model: VotingModel) -> dict:
    return {
        "weights": model.weights.tolist(),
        "classes": model.classes_.tolist(),
        "members": [model_to_dict(m) for m in model.members],
    }


def _voting_from_dict(data: dict) -> VotingModel:
    return VotingModel(
        members=[model_from_dict(m) for m in data["members"]],
        weights=np.asarray(data["weights"], dtype=np.float64),
        classes_=np.array(data["classes"]),
    )


def _stacked_to_dict(model: StackedModel) -> dict:
    return {
        "classes": model.classes_.tolist(),
        "meta": model.meta.to_dict(),
        "members": [model_to_dict(m) for m in model.members],
    }


def _stacked_from_dict(data: dict) -> StackedModel:
    return StackedModel(
        members=[model_from_dict(m) for m in data["members"]],
        meta=MlpModel.from_dict(data["meta"]),
        classes_=np.array(data["classes"]),
    )


register_model("bagged", BaggedModel, _bagged_from_dict)
register_model("voting", VotingModel, _voting_from_dict)
register_model("stacked", StackedModel, _stacked_from_dict)

_ENCODERS = {
    BaggedModel: _bagged_to_dict,
    VotingModel: _voting_to_dict,
    StackedModel: _stacked_to_dict,
}


def model_to_dict(model) -> dict:
    cls = type(model)
    if cls not in _TAGS:
        raise SchemaMismatch(f"no serialiser registered for {cls.__name__}")
    encoder = _ENCODERS.get(cls)
    payload = encoder(model) if encoder is not None else model.to_dict()
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "model_type": _TAGS[cls],
        "payload": payload,
    }


def model_from_dict(doc: dict):
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise SchemaMismatch(f"unsupported model format version {version!r}")
    tag = doc.get("model_type")
    if tag not in _REGISTRY:
        raise SchemaMismatch(f"unknown model type {tag!r}")
    _, decoder = _REGISTRY[tag]
    return decoder(doc["payload"])


def save_model(model, path: str | Path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(model_to_dict(model), sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_model(path: str | Path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{path}: invalid JSON: {exc}") from exc
    return model_from_dict(doc)
