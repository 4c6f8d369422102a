"""Self-describing container for sampled fields and connections.

Layout: 4-byte magic, 1 version byte, little-endian uint64 header length,
UTF-8 JSON header (dims, grid spec, kind), then row-major float64 node data,
little-endian.  Analytic families are exchanged as JSON parameter documents
through the registry instead.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .connection import SampledConnection
from .errors import ConfigError
from .fields import SampledBoundaryField, SampledField
from .grids import HalfSpaceGrid, QuadratureSpec

MAGIC = b"GTRC"
VERSION = 1


def _grid_header(grid: HalfSpaceGrid) -> dict:
    return {
        "n": grid.n,
        "half_width": grid.half_width,
        "height": grid.height,
        "n_lat": grid.spec.n_lat,
        "n_vert": grid.spec.n_vert,
        "grading": grid.spec.grading,
        "r_excl": grid.spec.r_excl,
    }


def _grid_from_header(h: dict) -> HalfSpaceGrid:
    spec = QuadratureSpec(n_lat=h["n_lat"], n_vert=h["n_vert"],
                          grading=h["grading"], r_excl=h["r_excl"])
    return HalfSpaceGrid(h["n"], h["half_width"], h["height"], spec)


def _write(path, kind: str, header: dict, payload: np.ndarray):
    header = dict(header)
    header["kind"] = kind
    header["shape"] = list(payload.shape)
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())


def _read(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ConfigError(f"{path}: not a gaugetrace container (bad magic)")
        version = fh.read(1)[0]
        if version != VERSION:
            raise ConfigError(f"{path}: unsupported container version {version}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        shape = tuple(header["shape"])
        count = int(np.prod(shape))
        data = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(shape)
    return header, np.asarray(data, dtype=float)


def save_field(path, field: SampledField):
    _write(path, "field", {"grid": _grid_header(field.grid),
                           "dim_fiber": field.dim_fiber}, field.values)


def load_field(path) -> SampledField:
    header, data = _read(path)
    if header.get("kind") != "field":
        raise ConfigError(f"{path}: container holds {header.get('kind')!r}, expected a field")
    # The constructor re-validates the compact-support collar: degenerate
    # inputs are rejected at load, not silently windowed.
    return SampledField(_grid_from_header(header["grid"]), data)


def save_boundary_field(path, field: SampledBoundaryField):
    _write(path, "boundary_field",
           {"n": field.n, "half_width": field.half_width,
            "dim_fiber": field.dim_fiber}, field.values)


def load_boundary_field(path) -> SampledBoundaryField:
    header, data = _read(path)
    if header.get("kind") != "boundary_field":
        raise ConfigError(
            f"{path}: container holds {header.get('kind')!r}, expected a boundary field")
    return SampledBoundaryField(header["n"], header["half_width"], data)


def save_connection(path, form: SampledConnection):
    _write(path, "connection", {"grid": _grid_header(form.grid),
                                "dim_fiber": form.dim_fiber}, form.values)


def load_connection(path) -> SampledConnection:
    header, data = _read(path)
    if header.get("kind") != "connection":
        raise ConfigError(
            f"{path}: container holds {header.get('kind')!r}, expected a connection")
    return SampledConnection(_grid_from_header(header["grid"]), data)


def save_analytic_params(path, spec: dict):
    """JSON document for an analytic family (connection or field parameters)."""
    Path(path).write_text(json.dumps(spec, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_analytic_params(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON parameter document: {exc}") from exc
