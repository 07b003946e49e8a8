"""Symmetry certificates S1, S2, S3, the eigenvalue-positivity conditions for
the reflected-difference operator, and the sine supersolution weight.

Every inequality is strict and evaluated with zero tolerance: ``margin =
rhs - lhs`` and a verdict passes iff ``margin > 0`` (and all side conditions
pass).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .diagnostics import FlowDiagnostics, compute_diagnostics, reconstruct_eulerian
from .eigen import assemble_L, sigma_root
from .errors import InvalidParameterError
from .core_fields import ScalarField, derivative_values
from .profiles import supremum_bounds
from .wave_solver import WaveSolution


@dataclass
class Entry:
    name: str
    lhs: float
    rhs: float
    margin: float
    verdict: bool
    side_conditions: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _entry(name, lhs, rhs, side=(), **notes) -> Entry:
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs
    side = list(side)
    verdict = bool(margin > 0 and all(s.verdict for s in side))
    return Entry(name, lhs, rhs, margin, verdict, side, notes)


def check_S1(diag: FlowDiagnostics) -> Entry:
    """eta_max^2 sup beta' + g eta_max^3 sup (rho'')^+ < pi^2."""
    lhs = diag.eta_max**2 * diag.sup_beta_prime + diag.g * diag.eta_max**3 * diag.sup_rho_pp_plus
    return _entry("S1", lhs, math.pi**2)


def check_S2(diag: FlowDiagnostics, L: float) -> Entry:
    """sup beta' + g eta_max sup (rho'')^+ < exp(-min(L, eta_min))."""
    lhs = diag.sup_beta_prime + diag.g * diag.eta_max * diag.sup_rho_pp_plus
    return _entry("S2", lhs, math.exp(-min(L, diag.eta_min)))


def check_S3(diag: FlowDiagnostics, L: float) -> Entry:
    """Perturbative certificate; side conditions eps1 < a0^2/A0 and eps2 < a0 come first."""
    a0, A0, e1, e2 = diag.a0, diag.A0, diag.eps1, diag.eps2
    side = [_entry("eps1 < a0^2/A0", e1, a0**2 / A0), _entry("eps2 < a0", e2, a0)]
    root = math.sqrt(e2 / a0)
    lhs = A0 * e1 * root + e2 * root + diag.g * diag.sup_abs_rho_p
    rhs = math.exp(-min(L, abs(diag.p0)) / math.sqrt(a0))
    return _entry("S3", lhs, rhs, side)


# -- reflected-difference operator conditions ----------------------------------

@dataclass
class LemmaReport:
    premise_met: bool
    premise: dict
    a0: float
    A0: float
    b: float
    delta1: float
    delta2: float
    sigma: float
    condition1: Entry
    condition1_min_variant: Entry
    eigenvalue_condition1: list
    eigenvalue_condition2: Entry
    verdict_condition1: bool
    verdict_alternative: bool
    delta2_le_b: bool
    delta2_le_b_nodal_violations: int

    def to_dict(self) -> dict:
        return asdict(self)


def lemma_conditions(h: ScalarField, h_tilde: ScalarField, profiles, g: float,
                     L: float | None = None) -> LemmaReport:
    """Drift bound b, delta1, delta2, sigma and both sufficient conditions for lambda1 > 0.

    The first condition uses max(L, |p0|) in the exponent for its verdict;
    the min(L, |p0|) variant is reported alongside.
    """
    grid = h.grid
    L = grid.L if L is None else float(L)
    op = assemble_L(h, h_tilde, profiles, g)
    inv = 1.0 / derivative_values(h.values, grid, "p")
    inv_t = 1.0 / derivative_values(h_tilde.values, grid, "p")
    a0, A0 = float(inv.min()), float(inv.max())
    mismatch_sup = abs(A0 - float(inv_t.max()))
    mismatch_inf = abs(a0 - float(inv_t.min()))
    premise_ok = mismatch_sup <= 1e-12 * max(1.0, A0) and mismatch_inf <= 1e-12 * max(1.0, a0)
    d_h, d_t = float(np.mean(h.top)), float(np.mean(h_tilde.top))
    premise = {"sup_inverse_hp_mismatch": mismatch_sup, "inf_inverse_hp_mismatch": mismatch_inf,
               "depth_mismatch": abs(d_h - d_t)}

    rho_p = profiles.rho_p(grid.p)[None, :]
    hp = 1.0 / inv
    tp = 1.0 / inv_t
    quad = hp**2 + hp * tp + tp**2
    strat = -g * rho_p * (h_tilde.values - d_t) * quad / hp**3
    b_nodal = np.hypot(op.b_p, op.b_q)
    d2_nodal = np.hypot(op.b_p - strat, op.b_q)
    b = float(b_nodal.max())
    delta2 = float(d2_nodal.max())
    sup_grho = g * supremum_bounds(profiles).sup_abs_rho_p
    delta1 = 3 * abs(grid.p0) * sup_grho
    sigma = float(sigma_root(a0, b))

    cond1 = _entry("condition1", sup_grho, math.exp(-sigma * max(L, abs(grid.p0))))
    cond1_min = _entry("condition1 (min variant)", sup_grho, math.exp(-sigma * min(L, abs(grid.p0))))
    eig1 = [_entry("delta1 < a0^2/A0", delta1, a0**2 / A0), _entry("delta2 < a0", delta2, a0)]
    lhs2 = A0 * delta1 * math.sqrt(b / a0) + delta2 * math.sqrt(delta2 / a0) + sup_grho
    eig2 = _entry("eigenvalue condition 2", lhs2, math.exp(-min(L, abs(grid.p0)) / math.sqrt(a0)))
    violations = int(np.sum(d2_nodal > b_nodal))
    return LemmaReport(
        premise_met=bool(premise_ok), premise=premise, a0=a0, A0=A0, b=b,
        delta1=delta1, delta2=delta2, sigma=sigma,
        condition1=cond1, condition1_min_variant=cond1_min,
        eigenvalue_condition1=eig1, eigenvalue_condition2=eig2,
        verdict_condition1=bool(premise_ok and cond1.verdict),
        verdict_alternative=bool(premise_ok and all(e.verdict for e in eig1) and eig2.verdict),
        delta2_le_b=bool(delta2 <= b), delta2_le_b_nodal_violations=violations,
    )


# -- supersolution weight ---------------------------------------------------------

@dataclass(frozen=True)
class Alpha:
    """alpha(y) = sin(pi((1 - 2 delta) y / eta_max + delta)), with derivatives in y."""
    eta_max: float
    delta: float

    @property
    def k(self) -> float:
        return math.pi * (1 - 2 * self.delta) / self.eta_max

    def _arg(self, y):
        return self.k * np.asarray(y, dtype=float) + math.pi * self.delta

    def __call__(self, y):
        return np.sin(self._arg(y))

    def dy(self, y):
        return self.k * np.cos(self._arg(y))

    def dyy(self, y):
        return -self.k**2 * np.sin(self._arg(y))


def build_alpha(eta_max: float, delta: float) -> Alpha:
    if not 0 < delta < 0.5:
        raise InvalidParameterError(f"delta must lie in (0, 1/2), got {delta}")
    if not eta_max > 0:
        raise InvalidParameterError(f"eta_max must be positive, got {eta_max}")
    return Alpha(float(eta_max), float(delta))


@dataclass
class SupersolutionReport:
    bound: float
    bound_delta: float | None
    eta_max: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def supersolution_bound(sup_beta_prime: float, sup_rho_pp_plus: float, g: float, eta_max: float,
                        delta: float | None = None) -> tuple[float, float | None]:
    base = sup_beta_prime + g * eta_max * sup_rho_pp_plus
    plain = base - math.pi**2 / eta_max**2
    refined = None if delta is None else base - (math.pi * (1 - 2 * delta)) ** 2 / eta_max**2
    return plain, refined


def supersolution_coefficient_check(sol: WaveSolution, c_speed: float | None = None,
                                    delta: float | None = None) -> SupersolutionReport:
    """Sign of the mean-value bound on the weighted zeroth-order coefficient.

    Passes iff sup beta' + g eta_max sup(rho'')^+ - pi^2/eta_max^2 < 0, the S1
    inequality divided by eta_max^2.  With ``delta`` the sharper bound using
    alpha's actual curvature pi^2 (1 - 2 delta)^2 / eta_max^2 is also given.
    """
    fields = reconstruct_eulerian(sol, c_speed)
    eta_max = float(np.max(fields.y.values[:, -1]) + sol.d)
    bnd = supremum_bounds(sol.profiles)
    plain, refined = supersolution_bound(bnd.sup_beta_prime, bnd.sup_rho_pp_plus, sol.g, eta_max, delta)
    return SupersolutionReport(bound=plain, bound_delta=refined, eta_max=eta_max, passed=bool(plain < 0))


# -- full report -------------------------------------------------------------------

@dataclass
class CertificateReport:
    S1: Entry
    S2: Entry
    S3: Entry
    lemma: LemmaReport | None
    provenance: dict

    def to_dict(self) -> dict:
        return {"S1": self.S1.to_dict(), "S2": self.S2.to_dict(), "S3": self.S3.to_dict(),
                "lemma": None if self.lemma is None else self.lemma.to_dict(),
                "provenance": self.provenance}


def certify(sol: WaveSolution, h_tilde: ScalarField | None = None) -> CertificateReport:
    """All three certificates for ``sol``; the operator conditions too when a comparison field is given."""
    diag = compute_diagnostics(sol)
    L = sol.grid.L
    lemma = None if h_tilde is None else lemma_conditions(sol.h, h_tilde, sol.profiles, sol.g, L)
    return CertificateReport(check_S1(diag), check_S2(diag, L), check_S3(diag, L), lemma, diag.to_dict())


def margin_uncertainty(coarse: CertificateReport, fine: CertificateReport) -> dict:
    """Change of each certificate margin under one grid refinement."""
    return {k: abs(getattr(fine, k).margin - getattr(coarse, k).margin) for k in ("S1", "S2", "S3")}
