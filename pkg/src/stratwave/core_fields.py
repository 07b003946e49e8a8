"""Grid functions on the period rectangle [-L/2, L/2] x [p0, 0].

The rectangle is periodic in q (no duplicated seam column) and bounded in p
(both endpoints are nodes).  Values are stored q-major: ``values[i, j]`` is
the value at ``(q_i, p_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParameterError

DERIVATIVES = ("q", "p", "qq", "pp", "qp")


@dataclass(frozen=True)
class Grid:
    L: float
    p0: float
    Nq: int
    Np: int

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise InvalidParameterError(f"period L must be positive, got {self.L}")
        if not np.isfinite(self.p0) or self.p0 >= 0:
            raise InvalidParameterError(f"flux p0 must be negative, got {self.p0}")
        if int(self.Nq) != self.Nq or self.Nq < 8 or self.Nq % 2:
            raise InvalidParameterError(f"Nq must be an even integer >= 8, got {self.Nq}")
        if int(self.Np) != self.Np or self.Np < 8:
            raise InvalidParameterError(f"Np must be an integer >= 8, got {self.Np}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "p0", float(self.p0))
        object.__setattr__(self, "Nq", int(self.Nq))
        object.__setattr__(self, "Np", int(self.Np))

    @property
    def dq(self) -> float:
        return self.L / self.Nq

    @property
    def dp(self) -> float:
        return abs(self.p0) / (self.Np - 1)

    @property
    def q(self) -> np.ndarray:
        return -self.L / 2 + np.arange(self.Nq) * self.dq

    @property
    def p(self) -> np.ndarray:
        return self.p0 + np.arange(self.Np) * self.dp

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nq, self.Np)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Q, P arrays of shape (Nq, Np)."""
        return np.meshgrid(self.q, self.p, indexing="ij")

    def refined(self) -> "Grid":
        """Grid with both spacings halved."""
        return Grid(self.L, self.p0, 2 * self.Nq, 2 * (self.Np - 1) + 1)

    def to_dict(self) -> dict:
        return {"L": self.L, "p0": self.p0, "Nq": self.Nq, "Np": self.Np}


def make_grid(L: float, p0: float, Nq: int, Np: int) -> Grid:
    return Grid(L, p0, Nq, Np)


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise InvalidParameterError(
                f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidParameterError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        Q, P = grid.mesh()
        return cls(grid, np.broadcast_to(fn(Q, P), grid.shape))

    @property
    def top(self) -> np.ndarray:
        return self.values[:, -1]

    @property
    def bottom(self) -> np.ndarray:
        return self.values[:, 0]

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values - other.values)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values + other.values)


# -- one-dimensional stencils, applied along an axis ---------------------------

def _first_periodic(v, h, axis=0):
    return (np.roll(v, -1, axis=axis) - np.roll(v, 1, axis=axis)) / (2 * h)


def _second_periodic(v, h, axis=0):
    return (np.roll(v, -1, axis=axis) - 2 * v + np.roll(v, 1, axis=axis)) / h**2


def first_bounded(v: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Central first difference with second-order one-sided ends."""
    v = np.moveaxis(np.asarray(v, dtype=float), axis, -1)
    out = np.empty_like(v)
    out[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2 * h)
    out[..., 0] = (-3 * v[..., 0] + 4 * v[..., 1] - v[..., 2]) / (2 * h)
    out[..., -1] = (3 * v[..., -1] - 4 * v[..., -2] + v[..., -3]) / (2 * h)
    return np.moveaxis(out, -1, axis)


def second_bounded(v: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Central second difference with second-order one-sided ends."""
    v = np.moveaxis(np.asarray(v, dtype=float), axis, -1)
    out = np.empty_like(v)
    out[..., 1:-1] = (v[..., 2:] - 2 * v[..., 1:-1] + v[..., :-2]) / h**2
    out[..., 0] = (2 * v[..., 0] - 5 * v[..., 1] + 4 * v[..., 2] - v[..., 3]) / h**2
    out[..., -1] = (2 * v[..., -1] - 5 * v[..., -2] + 4 * v[..., -3] - v[..., -4]) / h**2
    return np.moveaxis(out, -1, axis)


def derivative_values(values: np.ndarray, grid: Grid, which: str) -> np.ndarray:
    if which == "q":
        return _first_periodic(values, grid.dq, axis=0)
    if which == "qq":
        return _second_periodic(values, grid.dq, axis=0)
    if which == "p":
        return first_bounded(values, grid.dp, axis=1)
    if which == "pp":
        return second_bounded(values, grid.dp, axis=1)
    if which == "qp":
        return first_bounded(_first_periodic(values, grid.dq, axis=0), grid.dp, axis=1)
    raise InvalidParameterError(f"unknown derivative {which!r}; expected one of {DERIVATIVES}")


def derivative(f: ScalarField, which: str) -> ScalarField:
    """Second-order finite-difference derivative of ``f``.

    ``which`` is one of ``q, p, qq, pp, qp``.  q-stencils wrap periodically;
    p-stencils are one-sided (second order) on the bed and surface rows.
    """
    return ScalarField(f.grid, derivative_values(f.values, f.grid, which))


def all_derivatives(values: np.ndarray, grid: Grid) -> dict[str, np.ndarray]:
    return {w: derivative_values(values, grid, w) for w in DERIVATIVES}


def sup_seminorms(f: ScalarField) -> tuple[float, float, float, float, float]:
    """(sup|f|, sup|f_q|, sup|f_p|, sup|f_qq|, sup|f_qp|) over the nodes."""
    v = f.values
    return tuple(float(np.max(np.abs(a))) for a in (
        v,
        derivative_values(v, f.grid, "q"),
        derivative_values(v, f.grid, "p"),
        derivative_values(v, f.grid, "qq"),
        derivative_values(v, f.grid, "qp"),
    ))


# -- sparse matrix versions of the same stencils --------------------------------

def _periodic_matrix(n, h, order):
    off = np.ones(n)
    if order == 1:
        m = sp.diags([off[:-1], -off[:-1]], [1, -1], shape=(n, n), format="lil") / (2 * h)
        m[0, n - 1] = -1 / (2 * h)
        m[n - 1, 0] = 1 / (2 * h)
    else:
        m = sp.diags([off[:-1], -2 * off, off[:-1]], [1, 0, -1], shape=(n, n), format="lil") / h**2
        m[0, n - 1] = 1 / h**2
        m[n - 1, 0] = 1 / h**2
    return m.tocsr()


def _bounded_matrix(n, h, order):
    m = sp.lil_matrix((n, n))
    if order == 1:
        for j in range(1, n - 1):
            m[j, j - 1], m[j, j + 1] = -1 / (2 * h), 1 / (2 * h)
        m[0, :3] = np.array([-3, 4, -1]) / (2 * h)
        m[n - 1, n - 3:] = np.array([1, -4, 3]) / (2 * h)
    else:
        for j in range(1, n - 1):
            m[j, j - 1], m[j, j], m[j, j + 1] = 1 / h**2, -2 / h**2, 1 / h**2
        m[0, :4] = np.array([2, -5, 4, -1]) / h**2
        m[n - 1, n - 4:] = np.array([-1, 4, -5, 2]) / h**2
    return m.tocsr()


def derivative_matrix(grid: Grid, which: str) -> sp.csr_matrix:
    """Sparse (N x N) matrix of ``derivative(., which)`` on q-major vectors."""
    Iq = sp.identity(grid.Nq, format="csr")
    Ip = sp.identity(grid.Np, format="csr")
    if which == "q":
        m = sp.kron(_periodic_matrix(grid.Nq, grid.dq, 1), Ip)
    elif which == "qq":
        m = sp.kron(_periodic_matrix(grid.Nq, grid.dq, 2), Ip)
    elif which == "p":
        m = sp.kron(Iq, _bounded_matrix(grid.Np, grid.dp, 1))
    elif which == "pp":
        m = sp.kron(Iq, _bounded_matrix(grid.Np, grid.dp, 2))
    elif which == "qp":
        m = sp.kron(_periodic_matrix(grid.Nq, grid.dq, 1), _bounded_matrix(grid.Np, grid.dp, 1))
    else:
        raise InvalidParameterError(f"unknown derivative {which!r}")
    return sp.csr_matrix(m)


# -- periodic interpolation in q ------------------------------------------------

def interpolate_q(values: np.ndarray, grid: Grid, x: np.ndarray, snap: float = 1e-9) -> np.ndarray:
    """Evaluate a q-periodic grid function at abscissae ``x`` (any real values).

    Four-point cubic Lagrange interpolation; abscissae within ``snap`` (in
    units of dq) of a node return that node's values exactly.  ``values`` may
    be 1-D (length Nq) or 2-D (Nq, Np); the result has ``len(x)`` rows.
    """
    values = np.asarray(values, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = (x + grid.L / 2) / grid.dq
    i0 = np.floor(t)
    f = t - i0
    near_next = f > 1 - snap
    i0 = np.where(near_next, i0 + 1, i0).astype(int)
    f = np.where(near_next | (f < snap), 0.0, f)
    n = grid.Nq
    idx = [(i0 + k) % n for k in (-1, 0, 1, 2)]
    w = [
        -f * (f - 1) * (f - 2) / 6,
        (f + 1) * (f - 1) * (f - 2) / 2,
        -(f + 1) * f * (f - 2) / 2,
        (f + 1) * f * (f - 1) / 6,
    ]
    exact = f == 0.0
    if values.ndim == 2:
        w = [wk[:, None] for wk in w]
        exact = exact[:, None]
    interp = sum(wk * values[ik] for wk, ik in zip(w, idx))
    return np.where(exact, values[idx[1]], interp)
