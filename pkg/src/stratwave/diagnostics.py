"""Scalars consumed by the symmetry certificates, and Eulerian reconstruction.

All suprema and infima are nodal extremes on the computational grid.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import StagnationError
from .core_fields import ScalarField, all_derivatives, derivative_values
from .profiles import supremum_bounds
from .wave_solver import WaveSolution


@dataclass(frozen=True)
class FlowDiagnostics:
    a0: float
    A0: float
    M: float
    eta_max: float
    eta_min: float
    p0: float
    Q: float
    g: float
    sup_beta_prime: float
    sup_abs_beta: float
    sup_abs_rho_p: float
    sup_rho_pp_plus: float
    eps1: float
    eps2: float

    def to_dict(self) -> dict:
        return asdict(self)


def compose_eps1(g, eta_max, sup_abs_rho_p) -> float:
    return 3 * g * eta_max * sup_abs_rho_p


def compose_eps2(M, a0, A0, g, eta_max, sup_abs_beta, sup_abs_rho_p) -> float:
    """The perturbation constant bounding the drift of the reflected-difference operator."""
    S = sup_abs_beta + g * eta_max * sup_abs_rho_p
    return (4 * M * A0**2 + 2 * M**2 * A0**3 + 3 * A0 * S
            + 2 * M**3 * A0**3 / a0 + M**2 * A0**3 / a0 + M * A0**3 * S / a0**3)


def _hp(sol: WaveSolution) -> np.ndarray:
    hp = derivative_values(sol.h.values, sol.grid, "p")
    if np.any(hp <= 0):
        raise StagnationError("h_p <= 0: the flow has a stagnation point",
                              where=np.unravel_index(int(np.argmin(hp)), hp.shape))
    return hp


def compute_diagnostics(sol: WaveSolution) -> FlowDiagnostics:
    """Nodal ellipticity constants, M = |h_q|_{C^1}, surface extremes and eps1, eps2.

    eta_max and eta_min are extremes of h on the surface row (heights above
    the bed, not elevations relative to the mean depth).
    """
    D = all_derivatives(sol.h.values, sol.grid)
    if np.any(D["p"] <= 0):
        raise StagnationError("h_p <= 0: the flow has a stagnation point")
    inv = 1.0 / D["p"]
    a0, A0 = float(inv.min()), float(inv.max())
    M = float(max(np.max(np.abs(D[w])) for w in ("q", "qq", "qp")))
    top = sol.h.top
    eta_max, eta_min = float(top.max()), float(top.min())
    b = supremum_bounds(sol.profiles)
    g = float(sol.g)
    return FlowDiagnostics(
        a0=a0, A0=A0, M=M, eta_max=eta_max, eta_min=eta_min, p0=sol.grid.p0, Q=float(sol.Q), g=g,
        sup_beta_prime=b.sup_beta_prime, sup_abs_beta=b.sup_abs_beta,
        sup_abs_rho_p=b.sup_abs_rho_p, sup_rho_pp_plus=b.sup_rho_pp_plus,
        eps1=compose_eps1(g, eta_max, b.sup_abs_rho_p),
        eps2=compose_eps2(M, a0, A0, g, eta_max, b.sup_abs_beta, b.sup_abs_rho_p),
    )


@dataclass(frozen=True)
class EulerianFields:
    psi: ScalarField
    u: ScalarField
    v: ScalarField
    y: ScalarField
    rho: ScalarField
    c: float


def default_speed(sol: WaveSolution) -> float:
    """Speed for which the fastest counter-flow node is at rest: c = max 1/(h_p sqrt(rho))."""
    rho = sol.profiles.rho(sol.grid.p)[None, :]
    return float(np.max(1.0 / (_hp(sol) * np.sqrt(rho))))


def reconstruct_eulerian(sol: WaveSolution, c: float | None = None) -> EulerianFields:
    """Velocity field, stream function and physical heights on the (q, p) nodes.

    psi = -p by construction of the coordinates; u = c - 1/(h_p sqrt(rho)),
    v = -h_q/(h_p sqrt(rho)) and y = h - d.
    """
    grid = sol.grid
    hp = _hp(sol)
    hq = derivative_values(sol.h.values, grid, "q")
    if c is None:
        c = default_speed(sol)
    Qm, P = grid.mesh()
    rho = np.broadcast_to(sol.profiles.rho(grid.p)[None, :], grid.shape)
    sr = np.sqrt(rho)
    return EulerianFields(
        psi=ScalarField(grid, -P),
        u=ScalarField(grid, c - 1.0 / (hp * sr)),
        v=ScalarField(grid, -hq / (hp * sr)),
        y=ScalarField(grid, sol.h.values - sol.d),
        rho=ScalarField(grid, rho),
        c=float(c),
    )


def recompute_flux(fields: EulerianFields) -> np.ndarray:
    """Per-column trapezoid integral of sqrt(rho)(u - c) over the mapped heights."""
    f = np.sqrt(fields.rho.values) * (fields.u.values - fields.c)
    y = fields.y.values
    return np.sum(0.5 * (f[:, 1:] + f[:, :-1]) * np.diff(y, axis=1), axis=1)


def m_components_eulerian(u: ScalarField, v: ScalarField, rho: ScalarField, y: ScalarField,
                          c: float) -> tuple[float, float, float]:
    """The three maxima defining M, computed from Eulerian fields.

    Eulerian derivatives come from the chain rule on the mapped grid:
    d/dy = (d/dp) / y_p and d/dx = d/dq - y_q (d/dp) / y_p.
    """
    grid = u.grid
    rel = u.values - c
    if np.any(rel >= 0):
        raise StagnationError("u >= c somewhere: stagnation or reversed flow")
    r = v.values / rel
    yq = derivative_values(y.values, grid, "q")
    yp = derivative_values(y.values, grid, "p")
    r_q = derivative_values(r, grid, "q")
    r_p = derivative_values(r, grid, "p")
    r_y = r_p / yp
    r_x = r_q - yq * r_y
    first = np.max(np.abs(r))
    second = np.max(np.abs(r_x + r * r_y))
    third = np.max(np.abs(r_y / (np.sqrt(rho.values) * rel)))
    return float(first), float(second), float(third)


def compute_M_eulerian(u: ScalarField, v: ScalarField, rho: ScalarField, y: ScalarField,
                       c: float) -> float:
    return max(m_components_eulerian(u, v, rho, y, c))


def flux_error(fields: EulerianFields, p0: float) -> float:
    """Largest column deviation of the recomputed pseudo-volumetric flux from ``p0``."""
    return float(np.max(np.abs(recompute_flux(fields) - p0)))
