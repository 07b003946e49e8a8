import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stratwave.certificates import (build_alpha, certify, check_S1, check_S2, check_S3,
                                    lemma_conditions, margin_uncertainty, supersolution_bound,
                                    supersolution_coefficient_check)
from stratwave.diagnostics import FlowDiagnostics, compute_diagnostics
from stratwave.eigen import sigma_root
from stratwave.errors import InvalidParameterError
from stratwave.symmetry import reflect


def make_diag(**kw):
    base = dict(a0=1.0, A0=1.0, M=0.0, eta_max=1.0, eta_min=1.0, p0=-1.0, Q=20.62, g=9.81,
                sup_beta_prime=0.0, sup_abs_beta=0.0, sup_abs_rho_p=0.0, sup_rho_pp_plus=0.0,
                eps1=0.0, eps2=0.0)
    base.update(kw)
    return FlowDiagnostics(**base)


def test_still_water_certificates(still_water):
    rep = certify(still_water)
    assert rep.S1.verdict and rep.S2.verdict and rep.S3.verdict
    assert rep.S3.margin == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert rep.S1.margin == pytest.approx(math.pi**2)


def test_margin_is_rhs_minus_lhs_and_strict():
    diag = make_diag(sup_beta_prime=math.exp(-1.0))
    e = check_S2(diag, 2 * math.pi)
    assert e.margin == pytest.approx(0.0, abs=1e-15)
    assert not e.verdict  # equality is not enough
    e = check_S2(make_diag(sup_beta_prime=5.0), 2 * math.pi)
    assert e.margin == pytest.approx(math.exp(-1.0) - 5.0) and not e.verdict


def test_S3_side_conditions_gate_the_verdict():
    diag = make_diag(eps2=2.0)  # eps2 >= a0
    e = check_S3(diag, 2 * math.pi)
    assert not e.verdict
    assert [s.verdict for s in e.side_conditions] == [True, False]


def test_S1_uses_eta_max_powers():
    diag = make_diag(eta_max=2.0, sup_beta_prime=1.0, sup_rho_pp_plus=0.01)
    e = check_S1(diag)
    assert e.lhs == pytest.approx(4.0 + 9.81 * 8 * 0.01)


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 0.2), st.floats(0, 0.05), st.floats(0, 1), st.floats(0, 1))
def test_stabilising_profiles_pass_S1_S2(rho_lin, rho_quad, beta0, beta_lin):
    """beta' <= 0 and rho'' <= 0 make both left-hand sides vanish."""
    from stratwave.profiles import StreamlineProfiles, supremum_bounds
    prof = StreamlineProfiles.polynomial([1.0, -rho_lin, -rho_quad], [beta0, -beta_lin], -1.0)
    b = supremum_bounds(prof)
    diag = make_diag(sup_beta_prime=b.sup_beta_prime, sup_rho_pp_plus=b.sup_rho_pp_plus,
                     sup_abs_rho_p=b.sup_abs_rho_p)
    assert check_S1(diag).verdict and check_S2(diag, 2 * math.pi).verdict


def test_lemma_conditions_for_reflected_wave(stratified_wave):
    sol = stratified_wave
    ht = reflect(sol.h, 0.0)
    rep = lemma_conditions(sol.h, ht, sol.profiles, sol.g)
    assert rep.premise_met
    assert rep.sigma == pytest.approx(sigma_root(rep.a0, rep.b))
    assert rep.delta1 == pytest.approx(3 * 1.0 * 9.81 * 0.1)
    # the two exponents differ only through max versus min of (L, |p0|)
    assert rep.condition1.rhs <= rep.condition1_min_variant.rhs


def test_lemma_premise_fails_for_unrelated_fields(stratified_wave, vortical_wave):
    rep = lemma_conditions(stratified_wave.h, vortical_wave.h, stratified_wave.profiles, 9.81)
    assert not rep.premise_met
    assert not rep.verdict_condition1 and not rep.verdict_alternative


def test_alpha_properties():
    a = build_alpha(2.0, 0.1)
    y = np.linspace(0, 2.0, 101)
    assert np.all(a(y) > 0)
    assert a(0.0) == pytest.approx(math.sin(0.1 * math.pi))
    np.testing.assert_allclose(a.dyy(y), -a.k**2 * a(y))
    h = 1e-5
    np.testing.assert_allclose(a.dy(y[1:-1]), (a(y[1:-1] + h) - a(y[1:-1] - h)) / (2 * h), atol=1e-8)
    for bad in ((2.0, 0.0), (2.0, 0.5), (0.0, 0.1)):
        with pytest.raises(InvalidParameterError):
            build_alpha(*bad)


def test_supersolution_bound(still_water):
    rep = supersolution_coefficient_check(still_water, delta=0.1)
    assert rep.passed and rep.bound == pytest.approx(-math.pi**2)
    assert rep.bound_delta == pytest.approx(-(0.8 * math.pi) ** 2)
    plain, _ = supersolution_bound(20.0, 0.0, 9.81, 1.0)
    assert plain > 0


def test_margin_uncertainty(stratified_wave):
    rep = certify(stratified_wave)
    unc = margin_uncertainty(rep, rep)
    assert unc == {"S1": 0.0, "S2": 0.0, "S3": 0.0}
