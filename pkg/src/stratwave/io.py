"""File formats: grid fields, wave solutions, operator dumps and report JSON.

Binary layout: one line of JSON header (terminated by a newline) followed by
the raw little-endian float64 values in q-major order.  The CSV layout puts
the same header on a leading ``#`` line and writes one q-row per line using
``repr`` so both formats round-trip bit for bit.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .eigen import COEFFS, DiscreteOperator
from .errors import InvalidParameterError
from .core_fields import Grid, ScalarField
from .profiles import StreamlineProfiles
from .wave_solver import WaveSolution

MAGIC = "stratwave-field"
VERSION = 1


def _header(grid: Grid, **extra) -> dict:
    head = {"format": MAGIC, "version": VERSION, **grid.to_dict()}
    head.update(extra)
    return head


def _encode_blocks(path, header, blocks, fmt):
    path = Path(path)
    header = dict(header, blocks=len(blocks))
    line = json.dumps(header, sort_keys=True)
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(line.encode("utf-8") + b"\n")
            for b in blocks:
                fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# " + line + "\n")
            for b in blocks:
                for row in np.asarray(b, dtype=float):
                    fh.write(",".join(repr(float(x)) for x in row) + "\n")
    else:
        raise InvalidParameterError(f"unknown field format {fmt!r}")
    return path


def _decode_blocks(path):
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(b"# "):
        text = raw.decode("utf-8").splitlines()
        header = json.loads(text[0][2:])
        rows = [[float(x) for x in line.split(",")] for line in text[1:] if line]
        data = np.array(rows, dtype=float)
    else:
        nl = raw.index(b"\n")
        header = json.loads(raw[:nl].decode("utf-8"))
        data = np.frombuffer(raw[nl + 1:], dtype="<f8").astype(float)
    if header.get("format") != MAGIC:
        raise InvalidParameterError(f"{path} is not a {MAGIC} file")
    grid = Grid(header["L"], header["p0"], header["Nq"], header["Np"])
    n = header.get("blocks", 1)
    blocks = data.reshape(n, grid.Nq, grid.Np)
    return header, grid, blocks


def write_field(path, field: ScalarField, fmt: str = "bin", **extra) -> Path:
    """Write one field with its grid header (plus any JSON-serialisable extras)."""
    return _encode_blocks(path, _header(field.grid, kind="field", **extra), [field.values], fmt)


def read_field(path) -> tuple[ScalarField, dict]:
    header, grid, blocks = _decode_blocks(path)
    return ScalarField(grid, blocks[0]), header


def write_solution(path, sol: WaveSolution, fmt: str = "bin") -> Path:
    header = _header(sol.grid, kind="wave-solution", Q=float(sol.Q), g=float(sol.g),
                     amplitude=float(sol.amplitude), profiles=sol.profiles.to_spec())
    return _encode_blocks(path, header, [sol.h.values], fmt)


def read_solution(path) -> WaveSolution:
    header, grid, blocks = _decode_blocks(path)
    profiles = StreamlineProfiles.from_spec(header["profiles"], grid.p0)
    return WaveSolution(ScalarField(grid, blocks[0]), header["Q"], header["g"], profiles,
                        amplitude=header.get("amplitude", 0.0))


def write_operator(path, op: DiscreteOperator, fmt: str = "bin") -> Path:
    header = _header(op.grid, kind="operator", coefficients=list(COEFFS))
    return _encode_blocks(path, header, [getattr(op, n) for n in COEFFS], fmt)


def read_operator(path) -> DiscreteOperator:
    header, grid, blocks = _decode_blocks(path)
    return DiscreteOperator(grid, **dict(zip(header["coefficients"], blocks)))


# -- report JSON --------------------------------------------------------------------

def _round(x: float, digits: int):
    if not math.isfinite(x):
        return None
    if x == 0:
        return 0.0
    return float(f"{x:.{digits}g}")


def to_jsonable(obj, digits: int = 12):
    """Plain JSON types; floats rounded to ``digits`` significant digits, non-finite to null."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v, digits) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj), digits)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_report(report: dict) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"
