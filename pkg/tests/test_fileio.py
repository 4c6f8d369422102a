import numpy as np
import pytest

from gaugetrace.connection import SampledConnection
from gaugetrace.errors import ConfigError, UnsupportedField
from gaugetrace.fields import SampledBoundaryField, SampledField
from gaugetrace.fileio import (
    load_analytic_params,
    load_boundary_field,
    load_connection,
    load_field,
    save_analytic_params,
    save_boundary_field,
    save_connection,
    save_field,
)
from gaugetrace.grids import HalfSpaceGrid, QuadratureSpec
from gaugetrace.lie import random_skew

GRID = HalfSpaceGrid(1, 1.5, 0.5, QuadratureSpec(8, 8))


def sample_field_values(rng):
    values = np.zeros(GRID.node_shape() + (2,))
    values[2:-2, :-1, :] = rng.normal(size=values[2:-2, :-1, :].shape)
    return values


def test_field_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    f = SampledField(GRID, sample_field_values(rng))
    path = tmp_path / "field.gtrc"
    save_field(path, f)
    back = load_field(path)
    assert np.array_equal(back.values, f.values)
    assert back.grid.spec == GRID.spec
    assert back.grid.half_width == GRID.half_width


def test_boundary_field_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    values = np.zeros((9, 9, 3))
    values[2:-2, 2:-2] = rng.normal(size=(5, 5, 3))
    f = SampledBoundaryField(2, 1.5, values)
    path = tmp_path / "bf.gtrc"
    save_boundary_field(path, f)
    back = load_boundary_field(path)
    assert np.array_equal(back.values, f.values)
    assert back.n == 2 and back.half_width == 1.5


def test_connection_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    shape = GRID.node_shape() + (2, 3, 3)
    values = np.zeros(shape)
    for idx in np.ndindex(shape[:3]):
        values[idx] = random_skew(rng, 3)
    form = SampledConnection(GRID, values)
    path = tmp_path / "conn.gtrc"
    save_connection(path, form)
    back = load_connection(path)
    assert np.array_equal(back.values, form.values)
    x = np.array([0.3, 0.2])
    assert np.array_equal(back.coeffs(x), form.coeffs(x))


def test_load_rejects_broken_support(tmp_path):
    # A field whose collar is nonzero must be rejected at load, not windowed.
    rng = np.random.default_rng(3)
    values = sample_field_values(rng)
    f = SampledField(GRID, values)
    path = tmp_path / "bad.gtrc"
    save_field(path, f)
    raw = bytearray(path.read_bytes())
    raw[-8:] = np.array([1.0]).tobytes()  # poke the last node (top layer)
    path.write_bytes(bytes(raw))
    with pytest.raises(UnsupportedField):
        load_field(path)


def test_bad_magic_and_kind(tmp_path):
    path = tmp_path / "junk.gtrc"
    path.write_bytes(b"NOPE" + bytes(64))
    with pytest.raises(ConfigError):
        load_field(path)

    rng = np.random.default_rng(4)
    good = tmp_path / "field.gtrc"
    save_field(good, SampledField(GRID, sample_field_values(rng)))
    with pytest.raises(ConfigError):
        load_connection(good)


def test_analytic_params_round_trip(tmp_path):
    spec = {"family": "flux-abelian", "B": 1.0}
    path = tmp_path / "conn.json"
    save_analytic_params(path, spec)
    assert load_analytic_params(path) == spec
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_analytic_params(path)
