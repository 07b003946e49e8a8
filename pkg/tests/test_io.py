import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stratwave import Grid, ScalarField
from stratwave.errors import InvalidParameterError
from stratwave.io import (dumps_report, read_field, read_operator, read_solution, to_jsonable, write_field,
                          write_operator, write_solution)
from stratwave.verification import random_elliptic_operator, unit_square

GRID = Grid(2 * math.pi, -1.0, 8, 8)


@pytest.mark.parametrize("fmt", ["bin", "csv"])
def test_field_round_trip(tmp_path, fmt):
    v = np.random.default_rng(0).normal(size=GRID.shape)
    path = write_field(tmp_path / f"f.{fmt}", ScalarField(GRID, v), fmt=fmt, label="test")
    back, header = read_field(path)
    np.testing.assert_array_equal(back.values, v)
    assert back.grid == GRID and header["label"] == "test"


@pytest.mark.parametrize("fmt", ["bin", "csv"])
def test_solution_round_trip(tmp_path, stratified_wave, fmt):
    path = write_solution(tmp_path / "s", stratified_wave, fmt=fmt)
    back = read_solution(path)
    np.testing.assert_array_equal(back.h.values, stratified_wave.h.values)
    assert back.Q == stratified_wave.Q and back.amplitude == stratified_wave.amplitude
    assert back.profiles.to_spec() == stratified_wave.profiles.to_spec()


def test_operator_round_trip(tmp_path):
    op = random_elliptic_operator(np.random.default_rng(1), unit_square(7, 6))
    back = read_operator(write_operator(tmp_path / "op", op))
    for name in ("a_qq", "a_pp", "a_qp", "b_q", "b_p", "c"):
        np.testing.assert_array_equal(getattr(back, name), getattr(op, name))


def test_foreign_files_rejected(tmp_path):
    p = tmp_path / "x"
    p.write_bytes(b'{"format": "other"}\n')
    with pytest.raises(InvalidParameterError):
        read_field(p)
    with pytest.raises(InvalidParameterError):
        write_field(tmp_path / "y", ScalarField(GRID, np.zeros(GRID.shape)), fmt="hdf5")


def test_report_json_rounding_and_nonfinite():
    rep = {"b": 1 / 3, "a": [float("nan"), float("inf"), np.float64(2.0)], "c": np.int64(3), "d": True}
    out = json.loads(dumps_report(rep))
    assert out == {"a": [None, None, 2.0], "b": 0.333333333333, "c": 3, "d": True}
    assert list(out) == sorted(out)
    with pytest.raises(TypeError):
        to_jsonable({"x": object()})


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (8, 8), elements=st.floats(allow_nan=False, allow_infinity=False)),
       st.sampled_from(["bin", "csv"]))
def test_round_trip_is_bit_exact(tmp_path_factory, values, fmt):
    path = tmp_path_factory.mktemp("rt") / "f"
    write_field(path, ScalarField(GRID, values), fmt=fmt)
    np.testing.assert_array_equal(read_field(path)[0].values, values)


@settings(max_examples=100, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_rounding_is_idempotent(x):
    once = to_jsonable(x)
    assert to_jsonable(once) == once
    if x != 0:
        assert abs(once - x) <= 1e-11 * abs(x)
