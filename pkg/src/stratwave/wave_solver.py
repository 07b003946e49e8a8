"""Periodic waves: finite-difference Newton solver for the height equation.

Unknowns are the nodal heights above the bed row together with Q.  The
first Fourier cosine coefficient of the surface is pinned to the requested
amplitude and the first sine coefficient to zero; the extra equation is
balanced by a slack multiplier ``nu`` on the translation generator h_q,
which is exactly zero at every even solution.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from .errors import (BifurcationNotFoundError, DivergenceError, InvalidParameterError,
                     NoLaminarFlowError, StagnationError)
from .core_fields import Grid, ScalarField, _bounded_matrix, all_derivatives, derivative_matrix
from .laminar import LaminarFlow, laminar_from_slope
from .profiles import StreamlineProfiles


@dataclass
class SolverParams:
    tol: float = 1e-10
    step_tol: float = 1e-11
    max_iter: int = 50
    max_halvings: int = 10
    mode: int = 1


@dataclass
class WaveSolution:
    h: ScalarField
    Q: float
    g: float
    profiles: StreamlineProfiles
    amplitude: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.h.grid

    @property
    def d(self) -> float:
        return float(np.mean(self.h.top))

    @property
    def eta(self) -> np.ndarray:
        return self.h.top - self.d


@lru_cache(maxsize=16)
def _operators(grid: Grid):
    return {w: derivative_matrix(grid, w) for w in ("q", "p", "qq", "pp", "qp")}


def surface_modes(h_top: np.ndarray, grid: Grid, mode: int = 1) -> tuple[float, float]:
    """First (or ``mode``-th) cosine and sine Fourier coefficients of a surface trace."""
    k = 2 * np.pi * mode / grid.L
    c = 2 / grid.Nq * np.sum(h_top * np.cos(k * grid.q))
    s = 2 / grid.Nq * np.sum(h_top * np.sin(k * grid.q))
    return float(c), float(s)


def _check_stagnation(hp):
    if np.any(hp <= 0):
        i, j = np.unravel_index(int(np.argmin(hp)), hp.shape)
        raise StagnationError(f"h_p = {hp[i, j]:.3e} <= 0 at node (q-index {i}, p-index {j})",
                              where=(int(i), int(j)))


def _equation_terms(values, grid, Q, profiles, g):
    D = all_derivatives(values, grid)
    _check_stagnation(D["p"])
    rho_p = profiles.rho_p(grid.p)[None, :]
    beta = profiles.beta(-grid.p)[None, :]
    rho0 = profiles.rho(0.0)
    d = float(np.mean(values[:, -1]))
    hq, hp, hqq, hpp, hqp = D["q"], D["p"], D["qq"], D["pp"], D["qp"]
    interior = ((1 + hq**2) * hpp + hqq * hp**2 - 2 * hq * hp * hqp
                - g * (values - d) * hp**3 * rho_p + hp**3 * beta)
    top = 1 + hq[:, -1] ** 2 + hp[:, -1] ** 2 * (2 * g * rho0 * values[:, -1] - Q)
    return D, interior, top, d, rho_p, beta, rho0


def residual(h: ScalarField, Q: float, profiles: StreamlineProfiles, g: float):
    """Residual of the height equation at every node.

    Returns ``(interior, top, bottom)``: a ScalarField holding the interior
    residual (bed and surface rows set to zero), the surface condition per
    q-node and the bed values h(q, p0).

    Raises StagnationError if h_p <= 0 anywhere.
    """
    _, interior, top, _, _, _, _ = _equation_terms(h.values, h.grid, Q, profiles, g)
    interior = interior.copy()
    interior[:, 0] = 0.0
    interior[:, -1] = 0.0
    return ScalarField(h.grid, interior), top, h.values[:, 0].copy()


# -- bordered Newton system ----------------------------------------------------

class _System:
    def __init__(self, grid, profiles, g, amplitude, mode):
        self.grid, self.profiles, self.g = grid, profiles, g
        self.amplitude = amplitude
        Nq, Np = grid.shape
        self.N = Nq * Np
        j = np.tile(np.arange(Np), Nq)
        self.unknown = np.flatnonzero(j >= 1)
        self.is_top = (j == Np - 1)[self.unknown]
        self.top_nodes = np.flatnonzero(j == Np - 1)
        k = 2 * np.pi * mode / grid.L
        self.cos_row = 2 / Nq * np.cos(k * grid.q)
        self.sin_row = 2 / Nq * np.sin(k * grid.q)
        self.n = self.unknown.size + 2

    def pack(self, values, Q, nu):
        return np.concatenate([values.ravel()[self.unknown], [Q, nu]])

    def unpack(self, x):
        full = np.zeros(self.N)
        full[self.unknown] = x[:-2]
        return full.reshape(self.grid.shape), x[-2], x[-1]

    def residual(self, x):
        values, Q, nu = self.unpack(x)
        D, interior, top, *_ = _equation_terms(values, self.grid, Q, self.profiles, self.g)
        F = interior.copy()
        F[:, -1] = top
        F = F + nu * D["q"]
        c, s = values[:, -1] @ self.cos_row, values[:, -1] @ self.sin_row
        return np.concatenate([F.ravel()[self.unknown], [c - self.amplitude, s]])

    def jacobian(self, x):
        grid, g = self.grid, self.g
        values, Q, nu = self.unpack(x)
        D, _, _, d, rho_p, beta, rho0 = _equation_terms(values, grid, Q, self.profiles, g)
        hq, hp, hqq, hpp, hqp = D["q"], D["p"], D["qq"], D["pp"], D["qp"]
        ops = _operators(grid)
        top = np.zeros(grid.shape, dtype=bool)
        top[:, -1] = True

        def by_row(interior_coef, top_coef):
            return np.where(top, top_coef, interior_coef).ravel()

        zero = np.zeros(grid.shape)
        c_q = by_row(2 * hq * hpp - 2 * hp * hqp, 2 * hq)
        c_p = by_row(2 * hqq * hp - 2 * hq * hqp - 3 * g * (values - d) * hp**2 * rho_p + 3 * hp**2 * beta,
                    2 * hp * (2 * g * rho0 * values - Q))
        c_pp = by_row(1 + hq**2, zero)
        c_qq = by_row(hp**2, zero)
        c_qp = by_row(-2 * hq * hp, zero)
        c_0 = by_row(-g * hp**3 * rho_p, 2 * g * rho0 * hp**2)
        J = (sp.diags(c_q) @ ops["q"] + sp.diags(c_p) @ ops["p"] + sp.diags(c_pp) @ ops["pp"]
             + sp.diags(c_qq) @ ops["qq"] + sp.diags(c_qp) @ ops["qp"] + sp.diags(c_0)
             + nu * ops["q"])
        J = sp.csr_matrix(J)[self.unknown][:, self.unknown]
        blocks = [J]
        fd = (g * hp**3 * rho_p * np.broadcast_to(~top, grid.shape)).ravel()[self.unknown]
        if np.any(fd):
            top_cols = np.zeros(self.unknown.size)
            top_cols[self.is_top] = 1.0 / grid.Nq
            blocks = [J + sp.csr_matrix(np.outer(fd, top_cols))]
        col_Q = np.where(self.is_top, -(hp**2).ravel()[self.unknown], 0.0)
        col_nu = hq.ravel()[self.unknown]
        row_c = np.zeros(self.unknown.size)
        row_s = np.zeros(self.unknown.size)
        row_c[self.is_top] = self.cos_row
        row_s[self.is_top] = self.sin_row
        A = sp.bmat([
            [blocks[0], sp.csr_matrix(col_Q[:, None]), sp.csr_matrix(col_nu[:, None])],
            [sp.csr_matrix(row_c[None, :]), None, None],
            [sp.csr_matrix(row_s[None, :]), None, None],
        ], format="csc")
        return A


def _trial_norm(system, x):
    try:
        r = system.residual(x)
    except StagnationError:
        return np.inf, None
    n = np.max(np.abs(r))
    return (n if np.isfinite(n) else np.inf), r


def newton_solve(initial: WaveSolution, amplitude: float, params: SolverParams | None = None) -> WaveSolution:
    """Damped Newton iteration for a wave whose surface cosine coefficient is ``amplitude``.

    Converged when the residual sup-norm is below ``params.tol`` and the last
    step (if any) is below ``params.step_tol``.  Each step is backtracked by
    halving until the residual norm decreases (at most ``max_halvings`` times).

    Raises
    ------
    DivergenceError
        No convergence within ``max_iter`` steps, or a singular Newton system.
    StagnationError
        The initial guess has h_p <= 0.
    """
    params = params or SolverParams()
    if amplitude < 0:
        raise InvalidParameterError("amplitude must be non-negative")
    grid = initial.grid
    system = _System(grid, initial.profiles, initial.g, amplitude, params.mode)
    x = system.pack(initial.h.values, initial.Q, initial.info.get("nu", 0.0))
    r = system.residual(x)
    res = float(np.max(np.abs(r)))
    history = [res]
    step = None
    for it in range(params.max_iter + 1):
        if res < params.tol and (step is None or step < params.step_tol):
            values, Q, nu = system.unpack(x)
            return WaveSolution(ScalarField(grid, values), float(Q), initial.g, initial.profiles,
                                amplitude=amplitude,
                                info={"iterations": it, "residual": res, "history": history, "nu": float(nu)})
        if it == params.max_iter:
            break
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            try:
                dx = spsolve(system.jacobian(x), -r)
            except (MatrixRankWarning, RuntimeError) as exc:
                raise DivergenceError(f"singular Newton system: {exc}", history, amplitude) from exc
        if not np.all(np.isfinite(dx)):
            raise DivergenceError("non-finite Newton step", history, amplitude)
        t = 1.0
        for _ in range(params.max_halvings + 1):
            n_trial, r_trial = _trial_norm(system, x + t * dx)
            if n_trial < res:
                break
            t *= 0.5
        if r_trial is None:
            raise DivergenceError("line search left the region h_p > 0", history, amplitude)
        x = x + t * dx
        r, res = r_trial, float(n_trial)
        step = float(np.max(np.abs(t * dx)))
        history.append(res)
    raise DivergenceError(f"Newton did not converge in {params.max_iter} iterations "
                          f"(residual {res:.3e})", history, amplitude)


# -- laminar flows on the 2-D grid ----------------------------------------------

def _laminar_terms(H, grid, Q, profiles, g):
    Dp = _bounded_matrix(grid.Np, grid.dp, 1).toarray()
    Dpp = _bounded_matrix(grid.Np, grid.dp, 2).toarray()
    rho_p = profiles.rho_p(grid.p)
    beta = profiles.beta(-grid.p)
    rho0 = profiles.rho(0.0)
    Hp, Hpp = Dp @ H, Dpp @ H
    d = H[-1]
    return Dp, Dpp, rho_p, beta, rho0, Hp, Hpp, d


def _laminar_newton(H, Q, grid, profiles, g, slope, tol, max_iter):
    """Newton iteration for the q-independent discrete equations.

    With ``slope`` None, Q is held fixed; otherwise Q is an unknown and the
    bed slope (one-sided difference at p0) is pinned, which keeps the system
    regular across the fold of the laminar family at critical flow.
    """
    H = np.array(H, dtype=float)
    H[0] = 0.0
    prev = np.inf
    for _ in range(max_iter):
        Dp, Dpp, rho_p, beta, rho0, Hp, Hpp, d = _laminar_terms(H, grid, Q, profiles, g)
        if np.any(Hp <= 0):
            raise StagnationError("discrete laminar profile lost monotonicity")
        F = Hpp - g * (H - d) * Hp**3 * rho_p + Hp**3 * beta
        F[-1] = 1 + Hp[-1] ** 2 * (2 * g * rho0 * H[-1] - Q)
        F = F[1:]
        if slope is not None:
            F = np.append(F, Hp[0] - slope)
        res = np.max(np.abs(F))
        # stop at tol, or once the iteration stalls at roundoff level
        if res < tol or (res < 1e4 * tol and res > 0.5 * prev):
            return H, Q
        prev = res
        c_p = -3 * g * (H - d) * Hp**2 * rho_p + 3 * Hp**2 * beta
        J = Dpp + c_p[:, None] * Dp + np.diag(-g * Hp**3 * rho_p)
        J[:, -1] += g * Hp**3 * rho_p
        J[-1] = 2 * Hp[-1] * (2 * g * rho0 * H[-1] - Q) * Dp[-1]
        J[-1, -1] += 2 * g * rho0 * Hp[-1] ** 2
        J = J[1:, 1:]
        if slope is None:
            step = np.linalg.solve(J, -F)
            H[1:] += step
        else:
            col_Q = np.zeros(grid.Np - 1)
            col_Q[-1] = -Hp[-1] ** 2
            J = np.block([[J, col_Q[:, None]], [Dp[0, 1:][None, :], np.zeros((1, 1))]])
            step = np.linalg.solve(J, -F)
            H[1:] += step[:-1]
            Q += step[-1]
    raise NoLaminarFlowError("discrete laminar Newton iteration did not converge",
                             {"Q": float(Q), "slope": slope})


def _check_compatible(lam, grid):
    if lam.Np != grid.Np or abs(lam.p0 - grid.p0) > 1e-14 * abs(grid.p0):
        raise InvalidParameterError("laminar flow and grid disagree on the p-nodes")


def discrete_laminar(lam: LaminarFlow, grid: Grid, tol: float = 1e-13, max_iter: int = 30) -> np.ndarray:
    """Project a laminar profile onto the q-independent finite-difference solution at the same Q."""
    _check_compatible(lam, grid)
    H, _ = _laminar_newton(lam.H, lam.Q, grid, lam.profiles, lam.g, None, tol, max_iter)
    return H


def discrete_laminar_at_slope(lam: LaminarFlow, grid: Grid, tol: float = 1e-13,
                              max_iter: int = 30) -> tuple[np.ndarray, float]:
    """Discrete laminar solution with the bed slope of ``lam``; returns (H, Q)."""
    _check_compatible(lam, grid)
    return _laminar_newton(lam.H, lam.Q, grid, lam.profiles, lam.g, lam.slope, tol, max_iter)


def embed_laminar(lam: LaminarFlow, grid: Grid) -> WaveSolution:
    """The laminar flow as a q-uniform WaveSolution satisfying the discrete equations."""
    H = discrete_laminar(lam, grid)
    values = np.broadcast_to(H, grid.shape)
    return WaveSolution(ScalarField(grid, values), lam.Q, lam.g, lam.profiles, amplitude=0.0,
                        info={"iterations": 0, "nu": 0.0, "laminar_slope": lam.slope})


def mode_matrix(H: np.ndarray, grid: Grid, Q: float, profiles, g, mode: int = 1) -> np.ndarray:
    """Linearisation about a discrete laminar profile restricted to cos(k q) phi(p).

    Row 0 is the bed condition, the last row the linearised surface condition.
    """
    Dp, Dpp, rho_p, beta, rho0, Hp, Hpp, d = _laminar_terms(H, grid, Q, profiles, g)
    k = 2 * np.pi * mode / grid.L
    kd2 = (2 / grid.dq * np.sin(k * grid.dq / 2)) ** 2
    c_p = -3 * g * (H - d) * Hp**2 * rho_p + 3 * Hp**2 * beta
    A = Dpp + c_p[:, None] * Dp + np.diag(-g * Hp**3 * rho_p - kd2 * Hp**2)
    A[0] = 0.0
    A[0, 0] = 1.0
    A[-1] = 2 * Hp[-1] * (2 * g * rho0 * H[-1] - Q) * Dp[-1]
    A[-1, -1] += 2 * g * rho0 * Hp[-1] ** 2
    return A


def _mode_det(A):
    sign, logdet = np.linalg.slogdet(A)
    return float(sign * np.exp(logdet / A.shape[0]))


def mode_kernel(A: np.ndarray) -> np.ndarray:
    """Vertical structure of the bifurcating mode, normalised to 1 at the surface."""
    B = A.copy()
    B[-1] = 0.0
    B[-1, -1] = 1.0
    rhs = np.zeros(A.shape[0])
    rhs[-1] = 1.0
    return np.linalg.solve(B, rhs)


@dataclass
class Bifurcation:
    base: WaveSolution
    laminar: LaminarFlow
    kernel: np.ndarray
    slope: float
    info: dict


def locate_bifurcation(profiles: StreamlineProfiles, g: float, grid: Grid, slope_guess: float, *,
                       span: float = 20.0, n_scan: int = 49, mode: int = 1) -> Bifurcation:
    """Find the laminar flow from which waves of period L bifurcate.

    Laminar flows are parametrised by their bed slope; the discrete mode
    operator is scanned over [slope/span, slope*span] and the root with the
    smallest slope (fastest flow, i.e. the surface mode) is refined.
    """
    def evaluate(s):
        lam = laminar_from_slope(profiles, g, s, grid.Np)
        H, Q = discrete_laminar_at_slope(lam, grid)
        return lam, H, Q, mode_matrix(H, grid, Q, profiles, g, mode)

    def f(s):
        try:
            return _mode_det(evaluate(s)[3])
        except (NoLaminarFlowError, StagnationError):
            return np.nan

    slopes = np.geomspace(slope_guess / span, slope_guess * span, n_scan)
    vals = np.array([f(s) for s in slopes])
    roots = [k for k in range(n_scan - 1)
             if np.isfinite(vals[k]) and np.isfinite(vals[k + 1]) and vals[k] * vals[k + 1] < 0]
    if not roots:
        raise BifurcationNotFoundError(
            f"no bifurcation point for mode {mode} with bed slope in "
            f"[{slopes[0]:.4g}, {slopes[-1]:.4g}]")
    k = roots[0]
    s_star = brentq(f, slopes[k], slopes[k + 1], xtol=1e-14, rtol=1e-15, maxiter=200)
    lam, H, Q, A = evaluate(s_star)
    base = WaveSolution(ScalarField(grid, np.broadcast_to(H, grid.shape)), Q, g, profiles,
                        info={"iterations": 0, "nu": 0.0, "laminar_slope": s_star})
    return Bifurcation(base=base, laminar=lam, kernel=mode_kernel(A), slope=float(s_star),
                       info={"Q_bifurcation": Q, "slope": float(s_star), "n_roots_in_scan": len(roots)})


def continue_from_laminar(laminar: LaminarFlow, grid: Grid, target_amplitude: float, steps: int = 5,
                          params: SolverParams | None = None) -> WaveSolution:
    """Step the surface amplitude linearly from 0 to ``target_amplitude``.

    A zero target returns the discrete laminar embedding.  Otherwise the
    laminar family is first followed to its bifurcation point, the first
    step is seeded along the bifurcating mode and every later step
    warm-starts from the previous solution.
    """
    if steps < 1:
        raise InvalidParameterError("steps must be >= 1")
    if target_amplitude < 0:
        raise InvalidParameterError("target amplitude must be non-negative")
    if target_amplitude == 0:
        return embed_laminar(laminar, grid)
    params = params or SolverParams()
    bif = locate_bifurcation(laminar.profiles, laminar.g, grid, laminar.slope, mode=params.mode)
    k = 2 * np.pi * params.mode / grid.L
    direction = np.cos(k * grid.q)[:, None] * bif.kernel[None, :]
    current = bif.base
    a_prev = 0.0
    path = []
    for a in np.linspace(0.0, target_amplitude, steps + 1)[1:]:
        guess_values = current.h.values + (a - a_prev) * direction
        guess = WaveSolution(ScalarField(grid, guess_values), current.Q, current.g, current.profiles,
                             info={"nu": current.info.get("nu", 0.0)})
        try:
            current = newton_solve(guess, float(a), params)
        except DivergenceError as exc:
            exc.amplitude = float(a)
            raise
        path.append({"amplitude": float(a), "Q": current.Q, "iterations": current.info["iterations"]})
        a_prev = a
    current.info.update({"bifurcation": bif.info, "continuation": path})
    return current


def check_invariants(sol: WaveSolution, tol: float = 1e-10) -> list[str]:
    """Human-readable list of violated WaveSolution invariants (empty if none)."""
    problems = []
    h = sol.h.values
    if np.any(h[:, 0] != 0.0):
        problems.append("bed row is not identically zero")
    hp = all_derivatives(h, sol.grid)["p"]
    if np.any(hp <= 0):
        problems.append("h_p <= 0 somewhere")
        return problems
    interior, top, _ = residual(sol.h, sol.Q, sol.profiles, sol.g)
    if np.max(np.abs(interior.values)) > tol:
        problems.append(f"interior residual {np.max(np.abs(interior.values)):.3e} > {tol}")
    if np.max(np.abs(top)) > tol:
        problems.append(f"surface residual {np.max(np.abs(top)):.3e} > {tol}")
    if abs(np.mean(sol.eta)) > 1e-12 * max(1.0, sol.d):
        problems.append("surface elevation does not have zero mean")
    return problems
