"""File formats: datasets, fields, cones and CSV tables.

Datasets and fields are one line of JSON, a newline, then a raw
little-endian float64 payload in row-major voxel order (for datasets the
time index runs fastest). Field files append a uint8 mask payload when
the field carries a mask.
"""

from __future__ import annotations

import csv
import json
import math
import sys

import numpy as np

from .conefit import DesignMatrix
from .geometry import ConeSpec, arc_cone, orthant_cone, polyhedral_cone, sphere_cone
from .lattice import Dataset, LatticeField

DATASET_FORMAT = "conerft-dataset"
FIELD_FORMAT = "conerft-field"
_F8 = np.dtype("<f8")


class FormatError(Exception):
    """A file is unreadable or violates its declared format."""


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _read_header(fh, expected):
    line = fh.readline()
    try:
        header = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"bad header: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != expected:
        raise FormatError(f"expected a {expected} file")
    return header


def _read_payload(fh, count, dtype=_F8):
    raw = fh.read(count * dtype.itemsize)
    if len(raw) != count * dtype.itemsize:
        raise FormatError(f"payload truncated: expected {count} values")
    return np.frombuffer(raw, dtype=dtype).copy()


def write_dataset(path, dataset: Dataset):
    design = dataset.design
    header = {
        "format": DATASET_FORMAT, "version": 1, "dims": len(dataset.shape),
        "shape": list(dataset.shape), "n": dataset.n,
        "design": design.columns.tolist(), "cone_columns": list(design.cone_columns),
        "whitening": None if design.whitening is None else design.whitening.tolist(),
        "spacing": list(dataset.spacing), "meta": _jsonable(dataset.meta),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(np.ascontiguousarray(dataset.data, dtype=_F8).tobytes())


def read_dataset(path) -> Dataset:
    with open(path, "rb") as fh:
        h = _read_header(fh, DATASET_FORMAT)
        try:
            shape, n = tuple(int(s) for s in h["shape"]), int(h["n"])
            if len(shape) != int(h["dims"]):
                raise FormatError("dims does not match shape")
            data = _read_payload(fh, math.prod(shape) * n).reshape(shape + (n,))
            whitening = h.get("whitening")
            design = DesignMatrix(np.array(h["design"], dtype=float), tuple(h["cone_columns"]),
                                  None if whitening is None else np.array(whitening, dtype=float))
            if fh.read(1):
                raise FormatError("trailing bytes after payload")
            return Dataset(data, design, spacing=h.get("spacing"), meta=h.get("meta", {}))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad dataset header: {exc}") from exc


def write_field(path, field: LatticeField):
    header = {
        "format": FIELD_FORMAT, "version": 1, "dims": field.dim, "shape": list(field.shape),
        "spacing": list(field.spacing), "meta": _jsonable(field.meta),
        "mask": field.mask is not None,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(np.ascontiguousarray(field.values, dtype=_F8).tobytes())
        if field.mask is not None:
            fh.write(np.ascontiguousarray(field.mask, dtype=np.uint8).tobytes())


def read_field(path) -> LatticeField:
    with open(path, "rb") as fh:
        h = _read_header(fh, FIELD_FORMAT)
        try:
            shape = tuple(int(s) for s in h["shape"])
            values = _read_payload(fh, math.prod(shape)).reshape(shape)
            mask = None
            if h.get("mask"):
                mask = _read_payload(fh, math.prod(shape), np.dtype("u1")).reshape(shape).astype(bool)
            return LatticeField(values, spacing=h.get("spacing"), meta=h.get("meta", {}), mask=mask)
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad field header: {exc}") from exc


# --------------------------------------------------------------------------
# cones


def cone_from_dict(d: dict, n: int | None = None) -> ConeSpec:
    """Build a cone from ``{"type": "arc", "alpha": ...}`` and friends."""
    kind = d.get("type", d.get("provenance"))
    try:
        if kind == "arc":
            return arc_cone(float(d["alpha"]), n=int(n or d.get("n", 2)))
        if kind == "orthant":
            return orthant_cone(int(d["k"]), n)
        if kind == "sphere":
            return sphere_cone(int(d["k"]), n)
        if kind == "polyhedral":
            return polyhedral_cone(np.array(d["generators"], dtype=float), seed=int(d.get("seed", 0)))
    except KeyError as exc:
        raise FormatError(f"cone description missing {exc}") from exc
    raise FormatError(f"unknown cone type {kind!r}")


def cone_to_dict(cone: ConeSpec) -> dict:
    out = {"type": cone.provenance, **_jsonable(cone.params),
           "span_dim": cone.span_dim, "linear_dim": cone.linear_dim,
           "intrinsic_volumes": cone.intrinsic_volumes.tolist(), "weights": cone.weights.tolist()}
    if cone.generators is not None:
        out["generators"] = cone.generators.tolist()
    if cone.weights_se is not None:
        out["weights_se"] = cone.weights_se.tolist()
    return out


def parse_cone(text: str, n: int | None = None) -> ConeSpec:
    """Parse ``arc:1.06``, ``orthant:3``, ``sphere:2`` or a JSON file path."""
    kind, _, arg = text.partition(":")
    if kind in ("arc", "orthant", "sphere") and arg:
        key = "alpha" if kind == "arc" else "k"
        try:
            value = float(arg) if kind == "arc" else int(arg)
        except ValueError as exc:
            raise ValueError(f"bad cone parameter in {text!r}") from exc
        return cone_from_dict({"type": kind, key: value}, n)
    try:
        with open(text) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"cone file {text}: {exc}") from exc
    return cone_from_dict(d, n)


# --------------------------------------------------------------------------
# CSV


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.9g" % v
    return str(v)


def write_csv(path, header, rows):
    """CSV with nine significant digits and LF line endings; ``-`` is stdout."""
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    finally:
        if out is not sys.stdout:
            out.close()
