"""Seeded random operators and the property suites behind ``stratwave verify``.

Each suite returns a SuiteResult; a failing trial keeps enough of its inputs
(seed, trial index, scalars) to be replayed.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .eigen import (DiscreteOperator, bnv_exp_bound, perturbation_bound_check, principal_eigenvalue,
                    pw_lower_bound, verify_max_principle)
from .core_fields import Grid, ScalarField

SUITES = ("eigen-props", "perturbation", "max-principle")


def unit_square(n_interior_q: int = 19, n_interior_p: int = 20) -> Grid:
    """Unit square whose Dirichlet interior has the requested size (the q-count must be odd)."""
    return Grid(1.0, -1.0, n_interior_q + 1, n_interior_p + 2)


def smooth_field(rng: np.random.Generator, grid: Grid, n_modes: int = 4, max_wavenumber: int = 3) -> np.ndarray:
    """Random trigonometric sum scaled to sup-norm 1."""
    Qm, P = grid.mesh()
    x = (Qm + grid.L / 2) / grid.L
    y = (P - grid.p0) / abs(grid.p0)
    out = np.zeros(grid.shape)
    for _ in range(n_modes):
        kx, ky = rng.integers(0, max_wavenumber + 1, size=2)
        out += rng.normal() * np.cos(np.pi * kx * x + rng.uniform(0, 2 * np.pi)) \
            * np.cos(np.pi * ky * y + rng.uniform(0, 2 * np.pi))
    m = np.max(np.abs(out))
    return out / m if m > 0 else out


def random_elliptic_operator(rng: np.random.Generator, grid: Grid, a0: float | None = None,
                             drift_max: float = 1.0, mixed: bool = True, c: float | np.ndarray = 0.0
                             ) -> DiscreteOperator:
    """Operator with ellipticity floor exactly ``a0`` (drawn from [0.5, 2] if not given).

    The symbol is a0 I + r r^T with a smooth random vector r, so its smallest
    eigenvalue equals a0 at every node.  The drift is smooth with sup-norm
    of |b| equal to ``drift_max`` times a random factor in (0, 1].
    """
    a0 = float(rng.uniform(0.5, 2.0)) if a0 is None else float(a0)
    r1 = 0.5 * smooth_field(rng, grid)
    r2 = 0.5 * smooth_field(rng, grid) if mixed else np.zeros(grid.shape)
    bq, bp = smooth_field(rng, grid), smooth_field(rng, grid)
    mag = np.max(np.hypot(bq, bp)[1:, 1:-1])
    scale = drift_max * rng.uniform(0.1, 1.0) / mag if mag > 0 else 0.0
    return DiscreteOperator(grid, a_qq=a0 + r1**2, a_pp=a0 + r2**2, a_qp=2 * r1 * r2,
                            b_q=scale * bq, b_p=scale * bp, c=c,
                            meta={"a0": a0})


@dataclass
class SuiteResult:
    name: str
    trials: int
    failures: int
    skipped: int = 0
    worst_margin: float = float("inf")
    failing: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, margin: float, inputs: dict):
        self.worst_margin = min(self.worst_margin, float(margin))
        if margin < 0:
            self.failures += 1
            if len(self.failing) < 5:
                self.failing.append(inputs)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def run_eigen_props(trials: int = 20, seed: int = 0) -> SuiteResult:
    """Laplacian closed form, dense versus iterative agreement, shift rule, PW and exponential bounds."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("eigen-props", 0, 0)
    exact = 2 * np.pi**2
    for n in (16, 32):
        grid = Grid(1.0, -1.0, n, n + 2)
        lap = DiscreteOperator.laplacian(grid)
        d = principal_eigenvalue(lap, "dense").lambda1
        it = principal_eigenvalue(lap, "inverse-iteration").lambda1
        res.trials += 2
        res.record(1e-8 - abs(d - it), {"check": "dense-vs-iterative", "n": n, "dense": d, "iterative": it})
        res.record(0.05 * exact - abs(d - exact), {"check": "closed-form", "n": n, "lambda1": d})
    grid = unit_square(15, 16)
    for t in range(trials):
        op = random_elliptic_operator(rng, grid)
        est = principal_eigenvalue(op, "dense")
        lam = est.lambda1
        c0 = float(rng.uniform(-5, 5))
        shifted = principal_eigenvalue(op.replace(c=c0), "dense").lambda1
        phi_vals = 0.1 + np.abs(smooth_field(rng, grid))
        pw = pw_lower_bound(op, ScalarField(grid, phi_vals))
        bnv = bnv_exp_bound(op)
        res.trials += 3
        res.record(1e-10 * max(1.0, abs(lam)) - abs(shifted - (lam - c0)),
                   {"check": "shift", "seed": seed, "trial": t, "c0": c0})
        res.record(lam + 1e-8 - pw, {"check": "pw", "seed": seed, "trial": t, "pw": pw, "lambda1": lam})
        res.record(lam - bnv, {"check": "bnv", "seed": seed, "trial": t, "bnv": bnv, "lambda1": lam})
    return res


def prop25_pair(rng: np.random.Generator, grid: Grid):
    """Drift-only operator and a drift perturbation meeting delta^2 <= b a0 (b from the perturbed operator)."""
    op = random_elliptic_operator(rng, grid)
    a0 = op.meta["a0"]
    e_q, e_p = smooth_field(rng, grid), smooth_field(rng, grid)
    e_mag = np.max(np.hypot(e_q, e_p)[1:, 1:-1])
    b0 = op.drift_sup()
    frac = float(rng.uniform(0.05, 1.0))
    s = frac * np.sqrt(a0 * b0) / e_mag
    for _ in range(40):
        op2 = op.replace(b_q=op.b_q + s * e_q, b_p=op.b_p + s * e_p)
        delta = s * e_mag
        if delta**2 <= op2.drift_sup() * a0:
            return op, op2
        s *= 0.7
    return op, op2


def run_perturbation(trials: int = 100, seed: int = 0) -> SuiteResult:
    """Drift-perturbation and zeroth-order Lipschitz estimates against dense eigensolves."""
    rng = np.random.default_rng(seed)
    grid = unit_square(19, 20)
    res = SuiteResult("perturbation", 0, 0)
    for t in range(trials):
        op, op2 = prop25_pair(rng, grid)
        rep = perturbation_bound_check(op, op2)
        if not rep.premise_met:
            res.skipped += 1
        else:
            res.trials += 1
            res.record(rep.lhs - rep.rhs, {"check": "drift", "seed": seed, "trial": t, **rep.details,
                                           "lambda1": rep.lambda1, "lambda1_prime": rep.lambda1_prime})
        base = random_elliptic_operator(rng, grid, c=2.0 * smooth_field(rng, grid))
        dc = float(rng.uniform(0.0, 3.0)) * smooth_field(rng, grid)
        rep = perturbation_bound_check(base, base.replace(c=base.c + dc))
        res.trials += 1
        res.record(rep.rhs - rep.lhs + 1e-9 * max(1.0, abs(rep.lambda1)),
                   {"check": "zeroth-order", "seed": seed, "trial": t, **rep.details})
    return res


def max_principle_operators(rng: np.random.Generator, grid: Grid) -> list[tuple[str, DiscreteOperator]]:
    return [
        ("laplacian", DiscreteOperator.laplacian(grid)),
        ("laplacian+19", DiscreteOperator.laplacian(grid, c=19.0)),
        ("random-elliptic", random_elliptic_operator(rng, grid)),
    ]


def run_max_principle(trials: int = 100, seed: int = 0, inject_negative: bool = False) -> SuiteResult:
    """Random f <= 0 trials on operators with lambda1 > 0; optionally a lambda1 < 0 negative control."""
    rng = np.random.default_rng(seed)
    grid = unit_square(19, 20)
    res = SuiteResult("max-principle", 0, 0)
    ops = max_principle_operators(rng, grid)
    if inject_negative:
        ops.append(("laplacian+25", DiscreteOperator.laplacian(grid, c=25.0)))
    for name, op in ops:
        rep = verify_max_principle(op, trials, seed=seed)
        res.trials += rep.trials
        res.notes[name] = {"lambda1": rep.lambda1, "principle_holds": rep.principle_holds,
                           "min_ratio": rep.min_ratio, "witness": rep.witness}
        # a consistent report is a pass: positive lambda1 with no violation,
        # or negative lambda1 with a witness
        res.record(1.0 if rep.consistent else -1.0, {"operator": name, "seed": seed,
                                                      "lambda1": rep.lambda1, "witness": rep.witness})
    return res


def run_suite(name: str, trials: int, seed: int, inject_negative: bool = False) -> SuiteResult:
    if name == "eigen-props":
        return run_eigen_props(trials, seed)
    if name == "perturbation":
        return run_perturbation(trials, seed)
    if name == "max-principle":
        return run_max_principle(trials, seed, inject_negative)
    raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
