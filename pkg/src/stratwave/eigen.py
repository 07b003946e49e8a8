"""Second-order difference operators on the rectangle and their principal eigenvalue.

An operator acts as

    L u = a_qq u_qq + a_pp u_pp + a_qp u_qp + b_q u_q + b_p u_p + c u

with second-order central stencils (the mixed term uses the 4-point cross).
The eigenproblem carries homogeneous Dirichlet data on all four sides: the
q-node i = 0 (q = -L/2, identified with q = L/2) is the side wall and the
rows j = 0, Np-1 are bed and surface.  Interior unknowns are i = 1..Nq-1,
j = 1..Np-2, ordered q-major.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, splu

from .errors import (InvalidParameterError, InvalidTestFunctionError, MisuseError, PerronFailure,
                     SingularSystemError, StagnationError)
from .core_fields import Grid, ScalarField, derivative_values

DENSE_LIMIT = 2500
COEFFS = ("a_qq", "a_pp", "a_qp", "b_q", "b_p", "c")


def _central(n, h, order):
    """1-D central stencil on n interior nodes with zero Dirichlet neighbours."""
    one = np.ones(n - 1)
    if order == 1:
        return sp.diags([one, -one], [1, -1], shape=(n, n)) / (2 * h)
    return sp.diags([one, -2 * np.ones(n), one], [1, 0, -1], shape=(n, n)) / h**2


@dataclass(frozen=True)
class DiscreteOperator:
    grid: Grid
    a_qq: np.ndarray
    a_pp: np.ndarray
    a_qp: np.ndarray
    b_q: np.ndarray
    b_p: np.ndarray
    c: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in COEFFS:
            v = np.array(np.broadcast_to(np.asarray(getattr(self, name), dtype=float), self.grid.shape))
            if not np.all(np.isfinite(v)):
                raise InvalidParameterError(f"coefficient {name} is not finite")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    # -- construction helpers ----------------------------------------------
    @classmethod
    def constant(cls, grid: Grid, a_qq=1.0, a_pp=1.0, a_qp=0.0, b_q=0.0, b_p=0.0, c=0.0):
        return cls(grid, a_qq, a_pp, a_qp, b_q, b_p, c)

    @classmethod
    def laplacian(cls, grid: Grid, c: float = 0.0) -> "DiscreteOperator":
        """Delta + c with unit diffusion in both directions."""
        return cls.constant(grid, c=c)

    def replace(self, **changes) -> "DiscreteOperator":
        kw = {name: getattr(self, name) for name in COEFFS}
        kw.update(changes)
        return DiscreteOperator(self.grid, meta=dict(self.meta), **kw)

    # -- structure -----------------------------------------------------------
    @property
    def interior_shape(self) -> tuple[int, int]:
        return (self.grid.Nq - 1, self.grid.Np - 2)

    @property
    def n_interior(self) -> int:
        a, b = self.interior_shape
        return a * b

    def _interior(self, arr):
        return arr[1:, 1:-1]

    def matrix(self) -> sp.csr_matrix:
        """Sparse matrix of L on interior unknowns (Dirichlet zero outside)."""
        nq, np_ = self.interior_shape
        g = self.grid
        Dq1, Dq2 = _central(nq, g.dq, 1), _central(nq, g.dq, 2)
        Dp1, Dp2 = _central(np_, g.dp, 1), _central(np_, g.dp, 2)
        Iq, Ip = sp.identity(nq), sp.identity(np_)
        diag = lambda name: sp.diags(self._interior(getattr(self, name)).ravel())
        A = (diag("a_qq") @ sp.kron(Dq2, Ip) + diag("a_pp") @ sp.kron(Iq, Dp2)
             + diag("a_qp") @ sp.kron(Dq1, Dp1) + diag("b_q") @ sp.kron(Dq1, Ip)
             + diag("b_p") @ sp.kron(Iq, Dp1) + diag("c"))
        return sp.csr_matrix(A)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """L applied to a full-grid function (boundary values included), at interior nodes.

        q-neighbours wrap periodically, so the stencil at i = Nq-1 reads node 0.
        """
        g = self.grid
        v = np.asarray(values, dtype=float)
        D = {w: derivative_values(v, g, w) for w in ("q", "p", "qq", "pp", "qp")}
        out = (self.a_qq * D["qq"] + self.a_pp * D["pp"] + self.a_qp * D["qp"]
               + self.b_q * D["q"] + self.b_p * D["p"] + self.c * v)
        return self._interior(out)

    # -- scalar characteristics -------------------------------------------
    def ellipticity_floor(self) -> float:
        """Smallest eigenvalue of the symbol [[a_qq, a_qp/2], [a_qp/2, a_pp]] over interior nodes."""
        a, b, m = (self._interior(x) for x in (self.a_qq, self.a_pp, self.a_qp / 2))
        lam_min = 0.5 * (a + b) - np.sqrt(0.25 * (a - b) ** 2 + m**2)
        return float(lam_min.min())

    def drift_sup(self) -> float:
        return float(np.max(np.hypot(self._interior(self.b_q), self._interior(self.b_p))))

    @property
    def has_zeroth_order(self) -> bool:
        return bool(np.any(self._interior(self.c) != 0.0))

    def full_field(self, interior: np.ndarray) -> ScalarField:
        out = np.zeros(self.grid.shape)
        out[1:, 1:-1] = np.asarray(interior).reshape(self.interior_shape)
        return ScalarField(self.grid, out)


def assemble_L(h: ScalarField, h_tilde: ScalarField, profiles, g: float) -> DiscreteOperator:
    """Linear operator satisfied by the difference of two height functions.

    For discrete solutions h, h_tilde sharing Q and d, applying the result to
    h - h_tilde reproduces (F(h) - F(h_tilde)) / h_p^3 at interior nodes,
    where F is the interior residual.
    """
    if h.grid != h_tilde.grid:
        raise InvalidParameterError("h and h_tilde must live on the same grid")
    grid = h.grid
    hq, hp = (derivative_values(h.values, grid, w) for w in ("q", "p"))
    t = {w: derivative_values(h_tilde.values, grid, w) for w in ("q", "p", "qq", "pp", "qp")}
    if np.any(hp <= 0) or np.any(t["p"] <= 0):
        raise StagnationError("assemble_L needs h_p > 0 and h_tilde_p > 0")
    rho_p = profiles.rho_p(grid.p)[None, :]
    beta = profiles.beta(-grid.p)[None, :]
    d_t = float(np.mean(h_tilde.values[:, -1]))
    quad = hp**2 + hp * t["p"] + t["p"] ** 2
    inv3 = hp**-3.0
    b_p = (t["qq"] * (hp + t["p"]) - 2 * t["q"] * t["qp"] + beta * quad
           - g * rho_p * (h_tilde.values - d_t) * quad) * inv3
    b_q = (t["pp"] * (hq + t["q"]) - 2 * hp * t["qp"]) * inv3
    return DiscreteOperator(
        grid,
        a_qq=1.0 / hp,
        a_pp=(1 + hq**2) * inv3,
        a_qp=-2 * hq / hp**2,
        b_q=b_q,
        b_p=b_p,
        c=np.broadcast_to(-g * rho_p, grid.shape),
        meta={"source": "height-difference"},
    )


# -- principal eigenvalue ----------------------------------------------------------

@dataclass
class EigenEstimate:
    lambda1: float
    eigenvector: ScalarField
    method: str
    residual: float
    iterations: int = 0


def _perron_normalise(v):
    v = np.real(v)
    k = int(np.argmax(np.abs(v)))
    v = v / v[k]
    return v


def _finish(A, lam, v, method, iterations, op):
    v = _perron_normalise(v)
    if np.any(v <= 0):
        raise PerronFailure(
            f"principal eigenvector changes sign (min {v.min():.3e}); the discretisation "
            "is probably too coarse for the mixed term")
    res = float(np.max(np.abs(A @ v - lam * v)))
    return EigenEstimate(float(lam), op.full_field(v), method, res, iterations)


def principal_eigenvalue(op: DiscreteOperator, method: str = "auto", tol: float = 1e-8,
                         max_iter: int = 500) -> EigenEstimate:
    """Eigenvalue of -L with smallest real part, with its positive eigenvector.

    ``method="auto"`` uses a dense eigensolve up to 2500 interior nodes and
    shifted inverse iteration (sparse LU) above that.  The eigenvector is
    scaled to max 1; ``residual`` is the sup-norm of (-L - lambda1) phi.

    Raises PerronFailure if the selected eigenvalue is not real or the
    eigenvector changes sign.
    """
    A = -op.matrix()
    n = A.shape[0]
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "inverse-iteration"
    if method == "dense":
        w, V = sla.eig(A.toarray())
        k = int(np.argmin(w.real))
        lam = w[k]
        if abs(lam.imag) > 1e-8 * max(1.0, abs(lam)):
            raise PerronFailure(f"eigenvalue with smallest real part is complex: {lam}")
        lam = float(lam.real)
        v = _perron_normalise(V[:, k])
        # one shifted solve polishes the vector to full accuracy
        shift = lam - 1e-6 * max(1.0, abs(lam))
        v = _perron_normalise(splu(sp.csc_matrix(A - shift * sp.identity(n))).solve(v))
        lam = float(v @ (A @ v) / (v @ v))
        return _finish(A, lam, v, "dense", 1, op)
    if method != "inverse-iteration":
        raise InvalidParameterError(f"unknown eigen method {method!r}")
    diag = A.diagonal()
    radius = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    shift = float(np.min(diag - radius))
    v = np.ones(n)
    lam = shift
    refined = False
    it = 0
    lu = splu(sp.csc_matrix(A - shift * sp.identity(n)))
    for it in range(1, max_iter + 1):
        w = lu.solve(v)
        k = int(np.argmax(np.abs(w)))
        lam = shift + v[k] / w[k]
        v = w / w[k]
        res = float(np.max(np.abs(A @ v - lam * v)))
        if res <= tol:
            break
        if not refined and it >= 5:
            shift = lam - 1e-3 * max(1.0, abs(lam))
            lu = splu(sp.csc_matrix(A - shift * sp.identity(n)))
            refined = True
    else:
        raise PerronFailure(f"inverse iteration did not converge (residual {res:.3e})")
    lam = float(v @ (A @ v) / (v @ v))
    return _finish(A, lam, v, "inverse-iteration", it, op)


def pw_lower_bound(op: DiscreteOperator, phi: ScalarField) -> float:
    """min over interior nodes of (-L phi)/phi, using phi's boundary values in the stencils."""
    if phi.grid != op.grid:
        raise InvalidParameterError("phi and operator grids differ")
    inner = phi.values[1:, 1:-1]
    if np.any(inner <= 0):
        raise InvalidTestFunctionError("test function must be strictly positive at interior nodes")
    return float(np.min(-op.apply(phi.values) / inner))


def sigma_root(a0: float, b: float) -> float:
    """Positive root of a0 s^2 - b s - b = 1."""
    if not a0 > 0:
        raise InvalidParameterError(f"ellipticity constant must be positive, got {a0}")
    if b < 0:
        raise InvalidParameterError(f"drift bound must be non-negative, got {b}")
    return (b + np.sqrt(b * b + 4 * a0 * (1 + b))) / (2 * a0)


def bnv_exp_bound(op: DiscreteOperator) -> float:
    """exp(-sigma min(L, |p0|)) for a drift-only operator."""
    if op.has_zeroth_order:
        raise MisuseError("the exponential bound is stated for operators without zeroth-order term; "
                          "separate c first and use the Lipschitz estimate")
    sigma = sigma_root(op.ellipticity_floor(), op.drift_sup())
    return float(np.exp(-sigma * min(op.grid.L, abs(op.grid.p0))))


# -- comparison estimates --------------------------------------------------------

@dataclass
class PerturbationReport:
    kind: str
    premise_met: bool
    lambda1: float
    lambda1_prime: float
    lhs: float
    rhs: float
    passed: bool
    details: dict


def _same_principal_part(op, op2):
    return all(np.array_equal(getattr(op, n), getattr(op2, n)) for n in ("a_qq", "a_pp", "a_qp"))


def perturbation_bound_check(op: DiscreteOperator, op_prime: DiscreteOperator) -> PerturbationReport:
    """Check the drift-perturbation or zeroth-order Lipschitz estimate with dense eigensolves.

    Same drift and different c: |lambda1' - lambda1| <= |c' - c|_inf.
    Otherwise (both drift-only): lambda1' >= lambda1 - sqrt(b/a0) delta, with
    delta the nodal sup of |b' - b| and b the drift bound of ``op_prime``;
    the premise delta^2 <= b a0 is checked and reported.
    """
    if op.grid != op_prime.grid or not _same_principal_part(op, op_prime):
        raise InvalidParameterError("operators must share the grid and second-order coefficients")
    inner = lambda x: x[1:, 1:-1]
    same_drift = np.array_equal(op.b_q, op_prime.b_q) and np.array_equal(op.b_p, op_prime.b_p)
    l1 = principal_eigenvalue(op, method="dense" if op.n_interior <= DENSE_LIMIT else "auto").lambda1
    l2 = principal_eigenvalue(op_prime, method="dense" if op.n_interior <= DENSE_LIMIT else "auto").lambda1
    if same_drift:
        dc = float(np.max(np.abs(inner(op_prime.c) - inner(op.c))))
        lhs = abs(l2 - l1)
        return PerturbationReport("zeroth-order", True, l1, l2, lhs, dc, lhs <= dc + 1e-9 * max(1.0, abs(l1)),
                                  {"delta_c": dc})
    a0 = op.ellipticity_floor()
    b = op_prime.drift_sup()
    delta = float(np.max(np.hypot(inner(op_prime.b_q - op.b_q), inner(op_prime.b_p - op.b_p))))
    premise = (not op.has_zeroth_order and not op_prime.has_zeroth_order
               and delta**2 <= b * a0)
    rhs = l1 - np.sqrt(b / a0) * delta
    passed = bool(premise and l2 >= rhs - 1e-9 * max(1.0, abs(l1)))
    return PerturbationReport("drift", bool(premise), l1, l2, l2, float(rhs), passed,
                              {"a0": a0, "b": b, "delta": delta})


@dataclass
class MaxPrincipleReport:
    lambda1: float
    trials: int
    min_ratio: float
    principle_holds: bool
    consistent: bool
    witness: dict | None
    near_singular: bool = False


def _random_smooth(rng, grid, n_modes=4):
    Qm, P = grid.mesh()
    x = (Qm + grid.L / 2) / grid.L
    y = (P - grid.p0) / abs(grid.p0)
    out = np.zeros(grid.shape)
    for _ in range(n_modes):
        kx, ky = rng.integers(0, 4, size=2)
        out += rng.normal() * np.cos(np.pi * kx * x + rng.uniform(0, 2 * np.pi)) \
            * np.cos(np.pi * ky * y + rng.uniform(0, 2 * np.pi))
    return out


def verify_max_principle(op: DiscreteOperator, trials: int = 100, seed: int = 0,
                         tol: float = 1e-10) -> MaxPrincipleReport:
    """Solve L u = f with zero Dirichlet data for random smooth f <= 0 and inspect min u.

    The maximum principle predicts u >= 0 whenever lambda1 > 0.  With
    lambda1 < 0 a sign-violating pair is searched for; f = -phi1 always
    provides one, and is tried after the random draws.
    """
    eig = principal_eigenvalue(op)
    lam = eig.lambda1
    A = op.matrix()
    scale = float(np.max(np.abs(A.diagonal())))
    near_singular = abs(lam) < 1e-12 * scale
    if near_singular:
        return MaxPrincipleReport(lam, 0, float("nan"), False, False, None, near_singular=True)
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            lu = splu(sp.csc_matrix(A))
        except (RuntimeError, MatrixRankWarning) as exc:
            raise SingularSystemError(f"L is singular on this grid: {exc}") from exc
    rng = np.random.default_rng(seed)
    worst = np.inf
    witness = None
    for t in range(trials):
        smooth = _random_smooth(rng, op.grid)
        f = -(np.exp(smooth) if t % 2 == 0 else smooth**2)[1:, 1:-1].ravel()
        u = lu.solve(f)
        ratio = float(u.min() / np.max(np.abs(u)))
        worst = min(worst, ratio)
        if ratio < -tol and witness is None:
            witness = {"trial": t, "min_u": float(u.min()), "max_abs_u": float(np.max(np.abs(u))),
                       "f_kind": "random"}
    if lam < 0 and witness is None:
        phi = eig.eigenvector.values[1:, 1:-1].ravel()
        u = lu.solve(-phi)
        ratio = float(u.min() / np.max(np.abs(u)))
        worst = min(worst, ratio)
        if ratio < -tol:
            witness = {"trial": "principal eigenvector", "min_u": float(u.min()),
                       "max_abs_u": float(np.max(np.abs(u))), "f_kind": "-phi1"}
    holds = witness is None
    consistent = holds if lam > 0 else not holds
    return MaxPrincipleReport(lam, trials, float(worst), holds, consistent, witness)
