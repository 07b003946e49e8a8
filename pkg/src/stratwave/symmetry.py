"""Moving-plane diagnostic: reflected differences w(q, p; lambda) = h(q, p) - h(2 lambda - q, p).

Reflections off the q-nodes use periodic four-point cubic interpolation,
so every residual below is subject to an O(dq^4) interpolation floor.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .diagnostics import EulerianFields
from .core_fields import Grid, ScalarField, interpolate_q
from .wave_solver import WaveSolution


class NonMonotoneProfileWarning(UserWarning):
    """The surface has more than one crest per period."""


def reflect(h: ScalarField, lam: float) -> ScalarField:
    """h(2 lam - q, p) on the nodes of h's grid, wrapping periodically in q."""
    grid = h.grid
    return ScalarField(grid, interpolate_q(h.values, grid, 2 * lam - grid.q))


def _as_field(obj) -> ScalarField:
    return obj.h if isinstance(obj, WaveSolution) else obj


def _fourth_difference(v):
    """Largest undivided fourth difference in q; bounds the cubic interpolation error."""
    r = lambda k: np.roll(v, k, axis=0)
    return float(np.max(np.abs(r(2) - 4 * r(1) + 6 * v - 4 * r(-1) + r(-2))))


def _local_maxima(top):
    return int(np.sum((top > np.roll(top, 1)) & (top >= np.roll(top, -1))))


@dataclass
class MovingPlaneResult:
    lambda0: float
    min_w_top: float
    sym_residual: float
    classification: str
    axis: float
    rotation: float
    d_lambda: float
    tol_sym: float
    monotone: bool
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self, with_trace: bool = False) -> dict:
        out = asdict(self)
        if not with_trace:
            out.pop("trace")
        return out


def _min_w_top(top, grid, lam):
    q = grid.q
    inside = (q > lam) & (q < 2 * lam + grid.L / 2)
    if not np.any(inside):
        return np.inf
    qi = q[inside]
    return float(np.min(top[inside] - interpolate_q(top, grid, 2 * lam - qi)))


def _wrap(x, L):
    return (x + L / 2) % L - L / 2


def moving_plane_sweep(sol, n_lambda: int | None = None) -> MovingPlaneResult:
    """Sweep the plane q = lambda over (-L/2, 0] and classify the symmetry of h.

    The field is first rotated so that the lowest surface node is q = -L/2.
    lambda0 is the largest lambda on the uniform grid for which
    min over q in (lambda, 2 lambda + L/2) of w(q, 0; lambda) >= -1e-9 |h|.
    The symmetry residual is the smaller of |h - h reflected| over the axes
    lambda0 and the crest; below 1e-6 |h| the wave counts as symmetric, above
    100 times that (with lambda0 strictly inside (-L/2, 0)) as asymmetric,
    and inconclusive in between.  Reported axis and crest positions are in
    the original, unrotated frame.
    """
    h = _as_field(sol)
    grid = h.grid
    n_lambda = 4 * grid.Nq if n_lambda is None else int(n_lambda)
    shift = int(np.argmin(h.top))
    values = np.roll(h.values, -shift, axis=0)
    rotation = shift * grid.dq
    top = values[:, -1]
    norm = float(np.max(np.abs(h.values)))
    tol_w = 1e-9 * norm
    tol_sym = 1e-6 * norm

    maxima = _local_maxima(top)
    monotone = maxima <= 1
    if not monotone:
        warnings.warn(f"surface has {maxima} local maxima per period; the monotone-profile "
                      "hypothesis fails", NonMonotoneProfileWarning, stacklevel=2)

    d_lambda = (grid.L / 2) / n_lambda
    lams = -grid.L / 2 + d_lambda * np.arange(1, n_lambda + 1)
    lams[-1] = 0.0
    trace = [(float(lam), _min_w_top(top, grid, lam)) for lam in lams]
    passing = [lam for lam, m in trace if m >= -tol_w]
    lambda0 = max(passing) if passing else -grid.L / 2
    min_w0 = dict(trace).get(lambda0, np.inf)

    rotated = ScalarField(grid, values)
    crest = float(grid.q[int(np.argmax(top))])
    best_res, best_axis = np.inf, lambda0
    for x0 in (lambda0, crest):
        res = float(np.max(np.abs(values - reflect(rotated, x0).values)))
        if res < best_res:
            best_res, best_axis = res, x0
    interior = -grid.L / 2 < lambda0 < 0
    if best_res < tol_sym:
        classification = "symmetric"
    elif best_res > 100 * tol_sym and interior:
        classification = "asymmetric"
    else:
        classification = "inconclusive"
    return MovingPlaneResult(
        lambda0=float(lambda0), min_w_top=float(min_w0) if np.isfinite(min_w0) else 0.0,
        sym_residual=best_res, classification=classification,
        axis=float(_wrap(best_axis + rotation, grid.L)), rotation=float(rotation),
        d_lambda=float(d_lambda), tol_sym=tol_sym, monotone=bool(monotone),
        trace=[(lam, (m if np.isfinite(m) else None)) for lam, m in trace],
    )


# -- identities at the moving plane -------------------------------------------------

@dataclass
class IdentityReport:
    plane_value: float
    plane_tolerance: float
    plane_ok: bool
    bottom_max: float
    bottom_ok: bool
    mean_top: float
    mean_tolerance: float
    mean_ok: bool

    @property
    def passed(self) -> bool:
        return self.plane_ok and self.bottom_ok and self.mean_ok

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def _identity_report(w, w_plane, grid, norm, plane_tol):
    mean_top = float(np.mean(w[:, -1]))
    bottom = float(np.max(np.abs(w[:, 0])))
    return IdentityReport(
        plane_value=float(np.max(np.abs(w_plane))), plane_tolerance=plane_tol,
        plane_ok=bool(np.max(np.abs(w_plane)) <= plane_tol),
        bottom_max=bottom, bottom_ok=bottom == 0.0,
        mean_top=mean_top, mean_tolerance=1e-10 * norm, mean_ok=abs(mean_top) <= 1e-10 * norm,
    )


def boundary_identities_check(sol, lam: float) -> IdentityReport:
    """w vanishes on the plane q = lam (to interpolation accuracy), on the bed (exactly)
    and has zero surface mean (to 1e-10 |h|)."""
    h = _as_field(sol)
    grid = h.grid
    w = h.values - reflect(h, lam).values
    w_plane = interpolate_q(w, grid, np.array([lam]))[0]
    norm = float(np.max(np.abs(h.values)))
    plane_tol = 2 * _fourth_difference(h.values) + 1e-13 * norm
    return _identity_report(w, w_plane, grid, norm, plane_tol)


def boundary_identities_from_function(fn, grid: Grid, lam: float) -> IdentityReport:
    """The same identities for a function fn(q, p) evaluated directly, without periodic wrapping.

    A field that is not L-periodic fails the mean identity, which is the
    point: the identity is a consequence of periodicity.
    """
    Qm, P = grid.mesh()
    w = fn(Qm, P) - fn(2 * lam - Qm, P)
    p = grid.p
    w_plane = fn(np.full_like(p, lam), p) - fn(np.full_like(p, lam), p)
    norm = float(np.max(np.abs(fn(Qm, P))))
    return _identity_report(w, w_plane, grid, norm, 1e-13 * max(norm, 1.0))


@dataclass
class EulerianSymmetryReport:
    axis: float
    u_residual: float
    eta_residual: float
    v_residual: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def eulerian_symmetry_check(fields: EulerianFields, axis: float, tol: float = 1e-6) -> EulerianSymmetryReport:
    """u and eta even, v odd about x = axis (compared along streamlines, interpolated in q)."""
    grid = fields.u.grid
    eta = fields.y.values[:, -1]
    u_res = float(np.max(np.abs(fields.u.values - reflect(fields.u, axis).values)))
    v_res = float(np.max(np.abs(fields.v.values + reflect(fields.v, axis).values)))
    eta_res = float(np.max(np.abs(eta - interpolate_q(eta, grid, 2 * axis - grid.q))))
    return EulerianSymmetryReport(float(axis), u_res, eta_res, v_res, float(tol),
                                  bool(max(u_res, v_res, eta_res) < tol))
