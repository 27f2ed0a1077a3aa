"""YAML model files and one-symbol-per-line path files.

A model file looks like::

    alphabet_size: 2
    order: 1
    rows:
      - [0.9, 0.1]
      - [0.2, 0.8]
    initial_law: [0.6666666666666666, 0.3333333333333333]   # optional

An estimate file adds ``counts`` (``pairs``, ``contexts``, ``n0``) and an
optional ``smoothing``; its rows are recomputed from the counts on load.
Floats are written with ``repr`` so a save/load round trip is exact.
"""
from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
import yaml

from .errors import MarkovCusumError, ModelFileError
from .estimation import EmpiricalMarkovEstimate
from .markov_core import MarkovModel

PathLike = Union[str, Path]


def _float_rows(rows, where):
    try:
        return [[float(v) for v in row] for row in rows]
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{where}: rows must be lists of numbers ({exc})") from None


def _load_yaml(path: PathLike) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelFileError(f"{path}: not valid YAML ({exc})") from None
    if not isinstance(doc, dict):
        raise ModelFileError(f"{path}: expected a mapping at top level")
    return doc


def model_from_dict(doc: dict, where: str = "<dict>") -> MarkovModel:
    for key in ("alphabet_size", "rows"):
        if key not in doc:
            raise ModelFileError(f"{where}: missing key {key!r}")
    size = int(doc["alphabet_size"])
    order = int(doc.get("order", 1))
    rows = np.array(_float_rows(doc["rows"], where))
    if rows.ndim != 2 or rows.shape[1] != size:
        raise ModelFileError(f"{where}: rows must have {size} columns")
    init = doc.get("initial_law")
    if init is not None:
        init = np.array([float(v) for v in init])
    try:
        return MarkovModel(rows, order=order, initial_law=init)
    except (MarkovCusumError, ValueError) as exc:
        raise ModelFileError(f"{where}: {type(exc).__name__}: {exc}") from None


def estimate_from_dict(doc: dict, where: str = "<dict>") -> EmpiricalMarkovEstimate:
    counts = doc.get("counts")
    if not isinstance(counts, dict):
        raise ModelFileError(f"{where}: estimate files need a 'counts' mapping")
    try:
        return EmpiricalMarkovEstimate(np.array(counts["pairs"], dtype=np.int64),
                                       np.array(counts["contexts"], dtype=np.int64),
                                       int(counts["n0"]), int(doc.get("order", 1)),
                                       float(doc.get("smoothing", 0.0)))
    except KeyError as exc:
        raise ModelFileError(f"{where}: counts missing {exc}") from None
    except ValueError as exc:
        raise ModelFileError(f"{where}: {exc}") from None


def load_model(path: PathLike):
    """A MarkovModel, or an EmpiricalMarkovEstimate if the file has counts."""
    doc = _load_yaml(path)
    if "counts" in doc:
        return estimate_from_dict(doc, str(path))
    return model_from_dict(doc, str(path))


def model_to_dict(model) -> dict:
    doc = {"alphabet_size": int(model.n_symbols), "order": int(model.order),
           "rows": [[float(v) for v in row] for row in model.transitions]}
    if isinstance(model, EmpiricalMarkovEstimate):
        doc["counts"] = {"pairs": model.pair_counts.tolist(),
                         "contexts": model.symbol_counts.tolist(),
                         "n0": int(model.n0)}
        if model.smoothing:
            doc["smoothing"] = float(model.smoothing)
    else:
        doc["initial_law"] = [float(v) for v in model.initial_law]
    return doc


def save_model(model, path: PathLike) -> None:
    Path(path).write_text(yaml.safe_dump(model_to_dict(model), sort_keys=False,
                                         default_flow_style=None))


def read_path_file(path: PathLike, n_symbols: int = None) -> np.ndarray:
    try:
        lines = Path(path).read_text().split()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from None
    try:
        x = np.array([int(s) for s in lines], dtype=np.int64)
    except ValueError:
        raise ModelFileError(f"{path}: every line must be one symbol index") from None
    if x.size and (x.min() < 0 or (n_symbols is not None and x.max() >= n_symbols)):
        raise ModelFileError(f"{path}: symbol outside the alphabet")
    return x


def write_path_file(x, path: PathLike) -> None:
    Path(path).write_text("".join(f"{int(a)}\n" for a in x))
