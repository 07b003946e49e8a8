"""Laminar (q-independent) flows.

With h_q = 0 the height equation reduces to the two-point problem

    H'' = H'^3 (g (H - d) rho_p(p) - beta(-p)),   H(p0) = 0,
    1 + H'(0)^2 (2 g rho(0) H(0) - Q) = 0,        d = H(0),

solved by shooting on the bed slope H'(p0).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import InvalidParameterError, NoLaminarFlowError
from .profiles import StreamlineProfiles

BLOWUP = 1e12


@dataclass
class LaminarFlow:
    p: np.ndarray
    H: np.ndarray
    Hp: np.ndarray
    Q: float
    g: float
    profiles: StreamlineProfiles
    slope: float
    info: dict = field(default_factory=dict)

    @property
    def d(self) -> float:
        return float(self.H[-1])

    @property
    def p0(self) -> float:
        return float(self.p[0])

    @property
    def Np(self) -> int:
        return self.p.size

    def __call__(self, p):
        return CubicHermiteSpline(self.p, self.H, self.Hp)(p)

    def top_residual(self) -> float:
        rho0 = self.profiles.rho(0.0)
        return float(1 + self.Hp[-1] ** 2 * (2 * self.g * rho0 * self.H[-1] - self.Q))


def _stage_coefficients(profiles, p):
    """rho_p(p) and beta(-p) at nodes and half-steps (index 2n, 2n+1, 2n+2)."""
    pts = np.empty(2 * p.size - 1)
    pts[0::2] = p
    pts[1::2] = 0.5 * (p[:-1] + p[1:])
    pts = np.clip(pts, profiles.p0, 0.0)
    return profiles.rho_p(pts), profiles.beta(-pts)


def _rk4(profiles, g, slopes, d, p):
    """Integrate (H, H', dH/ds, dH'/ds) from the bed for each slope in ``slopes``.

    Returns arrays of shape (len(p), len(slopes)); diverging or stagnating
    columns are NaN from the first bad step on.
    """
    s = np.asarray(slopes, dtype=float)
    y = np.stack([np.zeros_like(s), s.copy(), np.zeros_like(s), np.ones_like(s)])
    out = np.full((4, p.size, s.size), np.nan)
    out[:, 0] = y
    rho_p, beta = _stage_coefficients(profiles, p)

    def rhs(k, y):
        rp, b = rho_p[k], beta[k]
        H, Hp, z1, z2 = y
        G = g * (H - d) * rp - b
        return np.stack([Hp, Hp**3 * G, z2, 3 * Hp**2 * G * z2 + Hp**3 * g * rp * z1])

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(p.size - 1):
            h = p[n + 1] - p[n]
            k1 = rhs(2 * n, y)
            k2 = rhs(2 * n + 1, y + h / 2 * k1)
            k3 = rhs(2 * n + 1, y + h / 2 * k2)
            k4 = rhs(2 * n + 2, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            bad = ~np.all(np.isfinite(y), axis=0) | (y[1] <= 0) | (np.abs(y[1]) > BLOWUP)
            y[:, bad] = np.nan
            out[:, n + 1] = y
    return out


def _top_condition(profiles, g, Q, traj):
    rho0 = profiles.rho(0.0)
    H, Hp, z1, z2 = traj[:, -1]
    F = 1 + Hp**2 * (2 * g * rho0 * H - Q)
    dF = 2 * Hp * z2 * (2 * g * rho0 * H - Q) + Hp**2 * 2 * g * rho0 * z1
    return F, dF


def _safeguarded_newton(fn, a, b, fa, fb, x0=None, maxit=100):
    """Root of ``fn`` (returning value and derivative) inside the bracket [a, b]."""
    x = 0.5 * (a + b) if x0 is None else x0
    for _ in range(maxit):
        f, df = fn(x)
        if not np.isfinite(f):
            x_new = 0.5 * (a + b)
        else:
            if f == 0 or abs(f) < 1e-15:
                return x
            if np.sign(f) == np.sign(fa):
                a, fa = x, f
            else:
                b, fb = x, f
            x_new = x - f / df if (np.isfinite(df) and df != 0) else np.nan
            if not (a < x_new < b):
                x_new = 0.5 * (a + b)
        if abs(x_new - x) <= 4e-16 * abs(x) or b - a <= 4e-16 * abs(b):
            return x_new
        x = x_new
    return x


def _shoot(profiles, g, Q, d, p, slopes, slope_guess):
    traj = _rk4(profiles, g, slopes, d, p)
    F, _ = _top_condition(profiles, g, Q, traj)
    valid = np.isfinite(F)
    brackets = [
        (k, k + 1) for k in range(slopes.size - 1)
        if valid[k] and valid[k + 1] and np.sign(F[k]) != np.sign(F[k + 1])
    ]
    if not brackets:
        raise NoLaminarFlowError(
            "shooting found no sign change of the top condition",
            diagnostics={
                "slope_range": [float(slopes[0]), float(slopes[-1])],
                "n_scanned": int(slopes.size),
                "n_valid": int(valid.sum()),
                "top_condition_min": float(np.nanmin(F)) if valid.any() else None,
                "top_condition_max": float(np.nanmax(F)) if valid.any() else None,
                "Q": float(Q),
            },
        )
    if slope_guess is None:
        k, k1 = brackets[-1]
    else:
        k, k1 = min(brackets, key=lambda br: abs(np.log(np.sqrt(slopes[br[0]] * slopes[br[1]]) / slope_guess)))

    def fn(s):
        tr = _rk4(profiles, g, [s], d, p)
        F1, dF1 = _top_condition(profiles, g, Q, tr)
        return float(F1[0]), float(dF1[0])

    s = _safeguarded_newton(fn, slopes[k], slopes[k1], F[k], F[k1])
    return s, [[float(slopes[a]), float(slopes[b])] for a, b in brackets]


def _check_inputs(profiles, g, Np):
    if not g > 0:
        raise InvalidParameterError(f"gravity must be positive, got {g}")
    if int(Np) != Np or Np < 8:
        raise InvalidParameterError(f"Np must be an integer >= 8, got {Np}")
    return np.linspace(profiles.p0, 0.0, int(Np))


def _finish(profiles, g, Q, p, slope, d, info):
    traj = _rk4(profiles, g, [slope], d, p)
    H, Hp = traj[0, :, 0], traj[1, :, 0]
    if not np.all(np.isfinite(Hp)) or np.any(Hp <= 0):
        raise NoLaminarFlowError("H' <= 0 encountered on the converged laminar flow",
                                 diagnostics={"slope": float(slope), "Q": float(Q)})
    H[0] = 0.0
    return LaminarFlow(p=p, H=H, Hp=Hp, Q=float(Q), g=float(g), profiles=profiles,
                       slope=float(slope), info=info)


def solve_laminar(profiles: StreamlineProfiles, g: float, Q: float, Np: int, *,
                  slope_guess: float | None = None,
                  slope_range: tuple[float, float] = (1e-3, 1e3),
                  n_scan: int = 241, d_tol: float = 1e-12, max_outer: int = 200) -> LaminarFlow:
    """Laminar flow with head constant ``Q`` on ``Np`` equispaced p-nodes.

    The bed slope H'(p0) is found by scanning ``slope_range`` for sign
    changes of the top condition and polishing with a bracketed Newton
    iteration (derivative from the variational equation).  With several
    brackets the one with the largest slope (deepest, slowest flow) is used,
    or the one closest to ``slope_guess``.  The nonlocal depth d = H(0) is
    converged by an outer fixed-point loop.

    Raises
    ------
    NoLaminarFlowError
        No bracket exists, the d-loop does not settle, or H' <= 0.
    """
    p = _check_inputs(profiles, g, Np)
    slopes = np.geomspace(slope_range[0], slope_range[1], n_scan)
    d = 0.0
    guess = slope_guess
    history = []
    for it in range(max_outer):
        s, brackets = _shoot(profiles, g, Q, d, p, slopes, guess)
        traj = _rk4(profiles, g, [s], d, p)
        d_new = float(traj[0, -1, 0])
        history.append(d_new)
        guess = s
        if abs(d_new - d) < d_tol:
            d = d_new
            if not profiles.rho_is_constant:
                s, brackets = _shoot(profiles, g, Q, d, p, slopes, guess)
            break
        d = d_new
    else:
        raise NoLaminarFlowError("depth fixed-point loop did not converge",
                                 diagnostics={"d_history": history[-10:], "Q": float(Q)})
    info = {"brackets": brackets, "outer_iterations": len(history)}
    return _finish(profiles, g, Q, p, s, d, info)


def laminar_from_slope(profiles: StreamlineProfiles, g: float, slope: float, Np: int, *,
                       d_tol: float = 1e-12, max_outer: int = 200) -> LaminarFlow:
    """Laminar flow with prescribed bed slope H'(p0); Q follows from the top condition."""
    p = _check_inputs(profiles, g, Np)
    d = 0.0
    for _ in range(max_outer):
        traj = _rk4(profiles, g, [slope], d, p)
        d_new = float(traj[0, -1, 0])
        if not np.isfinite(d_new):
            raise NoLaminarFlowError("integration from the bed failed",
                                     diagnostics={"slope": float(slope)})
        if abs(d_new - d) < d_tol:
            d = d_new
            break
        d = d_new
    else:
        raise NoLaminarFlowError("depth fixed-point loop did not converge",
                                 diagnostics={"slope": float(slope)})
    traj = _rk4(profiles, g, [slope], d, p)
    H0, Hp0 = traj[0, -1, 0], traj[1, -1, 0]
    Q = 2 * g * profiles.rho(0.0) * H0 + 1 / Hp0**2
    return _finish(profiles, g, Q, p, slope, d, {"from_slope": True})
