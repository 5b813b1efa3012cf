"""JSON model files: kind tag, hyperparameters and base64 little-endian arrays."""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .classic import ESTIMATORS, ClassicModel
from .cnn import CnnModel
from .preprocessing import Standardizer

FORMAT = "lded-acoustic-model"
VERSION = 1
KINDS = ("cnn",) + tuple(ESTIMATORS)


class ModelFormatError(ValueError):
    """Corrupt, truncated or incompatible model file."""


class ModelKindError(ModelFormatError):
    """The file holds a different model kind than requested."""


def _encode(arr: np.ndarray) -> dict:
    arr = np.asarray(arr)
    if arr.dtype.kind == "f":
        dtype = "<f4" if arr.dtype.itemsize == 4 else "<f8"
    elif arr.dtype.kind in "iub":
        dtype = "<i8"
    else:
        raise TypeError(f"cannot serialise dtype {arr.dtype}")
    data = np.ascontiguousarray(arr, dtype=dtype).tobytes()
    return {"dtype": dtype, "shape": list(arr.shape), "data": base64.b64encode(data).decode("ascii")}


def _decode(entry: dict) -> np.ndarray:
    dtype = np.dtype(entry["dtype"])
    raw = base64.b64decode(entry["data"], validate=True)
    shape = tuple(entry["shape"])
    if len(raw) != dtype.itemsize * int(np.prod(shape, dtype=np.int64)):
        raise ModelFormatError("array payload does not match its declared shape")
    return np.frombuffer(raw, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))


def model_to_dict(model, meta: dict | None = None) -> dict:
    if isinstance(model, CnnModel):
        kind, params, arrays, extra = "cnn", model.get_params(), model.arrays(), {}
    elif isinstance(model, ClassicModel):
        kind = model.kind
        params = model.estimator.get_params()
        arrays = {f"est.{k}": v for k, v in model.estimator.arrays().items()}
        arrays["standardizer.mean"] = model.standardizer.mean
        arrays["standardizer.std"] = model.standardizer.std
        extra = {"feature_names": list(model.feature_names)}
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "hyperparameters": params,
        **extra,
        "meta": meta or {},
        "arrays": {k: _encode(v) for k, v in sorted(arrays.items())},
    }


def model_from_dict(doc: dict, expected_kind: str | None = None):
    try:
        if doc.get("format") != FORMAT:
            raise ModelFormatError(f"not a model file (format={doc.get('format')!r})")
        if doc.get("version") != VERSION:
            raise ModelFormatError(f"unsupported model file version {doc.get('version')!r}")
        kind = doc["kind"]
        if kind not in KINDS:
            raise ModelKindError(f"unknown model kind {kind!r}")
        if expected_kind is not None and kind != expected_kind:
            raise ModelKindError(f"expected a {expected_kind!r} model, file holds {kind!r}")
        arrays = {k: _decode(v) for k, v in doc["arrays"].items()}
        params = doc["hyperparameters"]
        if kind == "cnn":
            return CnnModel.from_arrays(params, arrays)
        est_arrays = {k[4:]: v for k, v in arrays.items() if k.startswith("est.")}
        estimator = ESTIMATORS[kind].from_arrays(params, est_arrays)
        std = Standardizer(arrays["standardizer.mean"], arrays["standardizer.std"])
        return ClassicModel(kind, estimator, std, doc["feature_names"])
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ModelFormatError(f"corrupt model payload: {exc}") from exc


def save_model(model, path: str | Path, meta: dict | None = None) -> None:
    text = json.dumps(model_to_dict(model, meta), sort_keys=True, indent=1)
    Path(path).write_text(text + "\n")


def load_model(path: str | Path, expected_kind: str | None = None):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: top-level JSON value is not an object")
    return model_from_dict(doc, expected_kind)


def load_meta(path: str | Path) -> dict:
    return json.loads(Path(path).read_text()).get("meta", {})
