"""Streamline density rho(p) on [p0, 0] and Bernoulli function beta(s) on [0, |p0|].

Every caller queries beta at ``s = -p``; nothing else in the package flips
that sign.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import simpson

from .errors import DomainError, InvalidParameterError
from .core_fields import first_bounded, second_bounded

TARGETS = ("rho", "rho_p", "rho_pp", "beta", "beta_prime")


class Profile1D:
    """A scalar function on [a, b] with first and second derivatives.

    Two representations: ``kind="poly"`` (ascending coefficients, analytic
    derivatives) and ``kind="samples"`` (uniform samples including both
    endpoints, derivatives by second-order finite differences on the samples,
    values between samples by linear interpolation).
    """

    def __init__(self, kind, domain, coeffs=None, values=None):
        a, b = float(domain[0]), float(domain[1])
        if not b > a:
            raise InvalidParameterError(f"empty profile domain [{a}, {b}]")
        self.kind = kind
        self.domain = (a, b)
        if kind == "poly":
            if coeffs is None or len(coeffs) == 0:
                raise InvalidParameterError("polynomial profile needs coefficients")
            self.coeffs = [float(c) for c in coeffs]
            self._poly = Polynomial(self.coeffs)
            self._derivs = [self._poly, self._poly.deriv(1), self._poly.deriv(2)]
        elif kind == "samples":
            v = np.asarray(values, dtype=float)
            if v.ndim != 1 or v.size < 4:
                raise InvalidParameterError("sampled profile needs at least 4 samples")
            if not np.all(np.isfinite(v)):
                raise InvalidParameterError("profile samples must be finite")
            self.values = v
            self.nodes = np.linspace(a, b, v.size)
            ds = self.nodes[1] - self.nodes[0]
            self._tables = [v, first_bounded(v, ds), second_bounded(v, ds)]
        else:
            raise InvalidParameterError(f"unknown profile kind {kind!r}")

    @classmethod
    def poly(cls, coeffs, domain):
        return cls("poly", domain, coeffs=coeffs)

    @classmethod
    def samples(cls, values, domain):
        return cls("samples", domain, values=values)

    @classmethod
    def from_function(cls, fn, domain, n=2001):
        x = np.linspace(domain[0], domain[1], n)
        return cls("samples", domain, values=fn(x))

    @classmethod
    def from_spec(cls, spec: dict, domain):
        kind = spec.get("kind")
        dom = spec.get("domain", domain)
        if not np.allclose(dom, domain, rtol=0, atol=1e-12 * max(1.0, abs(domain[0]), abs(domain[1]))):
            raise InvalidParameterError(f"profile domain {dom} does not match {list(domain)}")
        if kind == "poly":
            return cls.poly(spec["coeffs"], domain)
        if kind == "samples":
            return cls.samples(spec["values"], domain)
        raise InvalidParameterError(f"unknown profile kind {kind!r}")

    def to_spec(self) -> dict:
        if self.kind == "poly":
            return {"kind": "poly", "coeffs": list(self.coeffs), "domain": list(self.domain)}
        return {"kind": "samples", "values": self.values.tolist(), "domain": list(self.domain)}

    def _check(self, x):
        a, b = self.domain
        tol = 1e-12 * max(1.0, abs(a), abs(b))
        if np.any(x < a - tol) or np.any(x > b + tol):
            bad = x[(x < a - tol) | (x > b + tol)]
            raise DomainError(f"argument {bad.flat[0]!r} outside [{a}, {b}]")
        return np.clip(x, a, b)

    def __call__(self, x, order=0):
        scalar = np.ndim(x) == 0
        x = self._check(np.asarray(x, dtype=float))
        if self.kind == "poly":
            out = self._derivs[order](x)
        else:
            out = np.interp(x, self.nodes, self._tables[order])
        return float(out) if scalar else out

    @property
    def is_constant_zero_derivative(self) -> bool:
        if self.kind == "poly":
            return all(c == 0.0 for c in self.coeffs[1:])
        return bool(np.all(self._tables[1] == 0.0))

    def resolution(self) -> int:
        return 0 if self.kind == "poly" else self.values.size

    def dense_nodes(self, oversample=10, minimum=2001):
        n = max(minimum, oversample * self.resolution())
        return np.linspace(self.domain[0], self.domain[1], n)

    def sup(self, order=0, absolute=False):
        """Supremum of the ``order``-th derivative (or its absolute value).

        Polynomials: exact, by evaluating at the critical points inside the
        interval and at both ends.  Samples: maximum over a dense sampling.
        """
        if self.kind == "poly":
            d = self._derivs[order]
            a, b = self.domain
            cand = [a, b]
            dd = d.deriv()
            # negligible leading coefficients (e.g. subnormals) blow up the companion matrix
            dd = dd.trim(1e-14 * float(np.max(np.abs(dd.coef)))) if np.any(dd.coef) else dd
            crit = dd.roots() if dd.degree() > 0 else []
            cand += [r.real for r in np.atleast_1d(crit)
                     if abs(r.imag) <= 1e-12 * max(1.0, abs(r)) and a <= r.real <= b]
            vals = d(np.array(cand))
        else:
            vals = self(self.dense_nodes(), order)
        return float(np.max(np.abs(vals) if absolute else vals))


@dataclass(frozen=True)
class ProfileBounds:
    sup_beta_prime: float
    sup_abs_beta: float
    sup_abs_rho_p: float
    sup_rho_pp_plus: float


@dataclass
class StabilityReport:
    passed: bool
    min_rho: float
    max_rho_p: float
    worst_p: float
    n_violations: int


class StreamlineProfiles:
    """rho on [p0, 0] and beta on [0, |p0|]."""

    def __init__(self, rho: Profile1D, beta: Profile1D, p0: float):
        p0 = float(p0)
        if p0 >= 0:
            raise InvalidParameterError("p0 must be negative")
        tol = 1e-12 * max(1.0, abs(p0))
        if abs(rho.domain[0] - p0) > tol or abs(rho.domain[1]) > tol:
            raise InvalidParameterError(f"rho must live on [{p0}, 0], got {rho.domain}")
        if abs(beta.domain[0]) > tol or abs(beta.domain[1] + p0) > tol:
            raise InvalidParameterError(f"beta must live on [0, {-p0}], got {beta.domain}")
        self.rho_profile = rho
        self.beta_profile = beta
        self.p0 = p0

    @classmethod
    def polynomial(cls, rho_coeffs, beta_coeffs, p0):
        return cls(Profile1D.poly(rho_coeffs, (p0, 0.0)),
                   Profile1D.poly(beta_coeffs, (0.0, -p0)), p0)

    @classmethod
    def from_spec(cls, spec: dict, p0: float):
        return cls(Profile1D.from_spec(spec["rho"], (p0, 0.0)),
                   Profile1D.from_spec(spec["beta"], (0.0, -p0)), p0)

    def to_spec(self) -> dict:
        return {"rho": self.rho_profile.to_spec(), "beta": self.beta_profile.to_spec()}

    def rho(self, p):
        return self.rho_profile(p, 0)

    def rho_p(self, p):
        return self.rho_profile(p, 1)

    def rho_pp(self, p):
        return self.rho_profile(p, 2)

    def beta(self, s):
        return self.beta_profile(s, 0)

    def beta_prime(self, s):
        return self.beta_profile(s, 1)

    @property
    def rho_is_constant(self) -> bool:
        return self.rho_profile.is_constant_zero_derivative


def evaluate(profiles: StreamlineProfiles, target: str, at):
    if target not in TARGETS:
        raise InvalidParameterError(f"unknown target {target!r}; expected one of {TARGETS}")
    return getattr(profiles, target)(at)


def supremum_bounds(profiles: StreamlineProfiles) -> ProfileBounds:
    """(sup beta', sup|beta|, sup|rho_p|, sup (rho_pp)^+) over the full domains."""
    rho, beta = profiles.rho_profile, profiles.beta_profile
    return ProfileBounds(
        sup_beta_prime=beta.sup(1),
        sup_abs_beta=beta.sup(0, absolute=True),
        sup_abs_rho_p=rho.sup(1, absolute=True),
        sup_rho_pp_plus=max(0.0, rho.sup(2)),
    )


def validate_stable(profiles: StreamlineProfiles, tol: float = 1e-12) -> StabilityReport:
    """Check rho > 0 and rho_p <= tol on a dense sampling of [p0, 0]."""
    p = profiles.rho_profile.dense_nodes()
    r = profiles.rho(p)
    rp = profiles.rho_p(p)
    bad = (r <= 0) | (rp > tol)
    # worst location: largest rho_p, unless positivity is what fails
    k = int(np.argmin(r)) if np.any(r <= 0) else int(np.argmax(rp))
    return StabilityReport(
        passed=not bool(np.any(bad)),
        min_rho=float(r.min()),
        max_rho_p=float(rp.max()),
        worst_p=float(p[k]),
        n_violations=int(bad.sum()),
    )


def energy_increment(profiles: StreamlineProfiles, s: float, n: int = 2001) -> float:
    """E(s) - E(0) = -int_0^s beta(t) dt (composite Simpson)."""
    beta = profiles.beta_profile
    beta._check(np.asarray(float(s)))
    if s == 0:
        return 0.0
    if beta.kind == "samples":
        n = max(n, 10 * beta.resolution() + 1)
    n += (n + 1) % 2
    t = np.linspace(0.0, float(s), n)
    return -float(simpson(beta(t), x=t))
