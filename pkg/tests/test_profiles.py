import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stratwave.errors import DomainError, InvalidParameterError
from stratwave.profiles import (Profile1D, StreamlineProfiles, energy_increment, evaluate,
                                supremum_bounds, validate_stable)


def test_polynomial_values_and_derivatives():
    prof = StreamlineProfiles.polynomial([1.0, -0.2, 0.3], [0.5, 1.0], -2.0)
    p = np.array([-2.0, -1.0, 0.0])
    np.testing.assert_allclose(prof.rho(p), 1 - 0.2 * p + 0.3 * p**2)
    np.testing.assert_allclose(prof.rho_p(p), -0.2 + 0.6 * p)
    np.testing.assert_allclose(prof.rho_pp(p), 0.6)
    assert prof.beta(1.5) == pytest.approx(2.0)
    assert prof.beta_prime(0.3) == pytest.approx(1.0)
    assert evaluate(prof, "rho_p", -1.0) == pytest.approx(-0.8)


def test_unknown_target_rejected():
    prof = StreamlineProfiles.polynomial([1.0], [0.0], -1.0)
    with pytest.raises(InvalidParameterError):
        evaluate(prof, "vorticity", 0.0)


def test_out_of_domain_arguments_raise():
    prof = StreamlineProfiles.polynomial([1.0], [0.0], -1.0)
    with pytest.raises(DomainError):
        prof.rho(0.5)
    with pytest.raises(DomainError):
        prof.beta(-0.1)


def test_domain_mismatch_rejected():
    with pytest.raises(InvalidParameterError):
        StreamlineProfiles(Profile1D.poly([1.0], (-2.0, 0.0)), Profile1D.poly([0.0], (0.0, 1.0)), -1.0)


def test_sampled_profile_derivatives_converge():
    errs = []
    for n in (41, 81, 161):
        s = np.linspace(-1, 0, n)
        prof = Profile1D.samples(np.exp(s), (-1.0, 0.0))
        x = np.linspace(-1, 0, 7)
        errs.append(np.max(np.abs(prof(x, 1) - np.exp(x))))
    assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3


def test_supremum_bounds_polynomial():
    prof = StreamlineProfiles.polynomial([1.0, -0.1, -0.05], [0.0, 2.0, -1.0], -1.0)
    b = supremum_bounds(prof)
    # beta' = 2 - 2s on [0, 1]: max 2; |beta| max at s = 1: 1
    assert b.sup_beta_prime == pytest.approx(2.0)
    assert b.sup_abs_beta == pytest.approx(1.0)
    # rho_p = -0.1 - 0.1 p on [-1, 0]: |rho_p| max 0.1; rho_pp = -0.1 so its positive part is 0
    assert b.sup_abs_rho_p == pytest.approx(0.1)
    assert b.sup_rho_pp_plus == 0.0


def test_stability_detects_unstable_stratification():
    assert validate_stable(StreamlineProfiles.polynomial([1.0, -0.1], [0.0], -1.0)).passed
    rep = validate_stable(StreamlineProfiles.polynomial([1.0, 0.1], [0.0], -1.0))
    assert not rep.passed and rep.max_rho_p == pytest.approx(0.1)
    neg = validate_stable(StreamlineProfiles.polynomial([-0.5, -1.0], [0.0], -1.0))
    assert not neg.passed and neg.min_rho < 0


def test_energy_increment_oracle():
    prof = StreamlineProfiles.polynomial([1.0], [0.3, 2.0], -1.0)
    # E(s) - E(0) = -(0.3 s + s^2)
    assert energy_increment(prof, 0.5) == pytest.approx(-(0.15 + 0.25), rel=1e-12)
    assert energy_increment(prof, 0.0) == 0.0
    with pytest.raises(DomainError):
        energy_increment(prof, 2.0)


def test_spec_round_trip():
    prof = StreamlineProfiles.polynomial([1.0, -0.1], [0.0, 0.5], -1.5)
    again = StreamlineProfiles.from_spec(prof.to_spec(), -1.5)
    p = np.linspace(-1.5, 0, 5)
    np.testing.assert_array_equal(again.rho(p), prof.rho(p))
    with pytest.raises(InvalidParameterError):
        StreamlineProfiles.from_spec({"rho": {"kind": "spline"}, "beta": {"kind": "poly", "coeffs": [0]}}, -1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=4))
def test_bounds_dominate_nodal_values(coeffs):
    prof = StreamlineProfiles.polynomial([1.0], coeffs, -1.0)
    b = supremum_bounds(prof)
    s = np.linspace(0, 1, 101)
    assert np.all(prof.beta_prime(s) <= b.sup_beta_prime + 1e-9)
    assert np.all(np.abs(prof.beta(s)) <= b.sup_abs_beta + 1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 3), st.floats(0, 2))
def test_decreasing_linear_density_is_stable(r0, slope):
    assert validate_stable(StreamlineProfiles.polynomial([r0 + slope, -slope / 1.0], [0.0], -1.0)).passed
