import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stratwave.eigen import principal_eigenvalue
from stratwave.verification import (SuiteResult, prop25_pair, random_elliptic_operator, run_eigen_props,
                                    run_max_principle, run_suite, smooth_field, unit_square)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.5, 2.0))
def test_random_operator_has_requested_floor(seed, a0):
    op = random_elliptic_operator(np.random.default_rng(seed), unit_square(9, 10), a0=a0)
    assert op.ellipticity_floor() == pytest.approx(a0, rel=1e-12)
    assert 0 < op.drift_sup() <= 1.0 + 1e-12


def test_smooth_field_normalised():
    f = smooth_field(np.random.default_rng(0), unit_square())
    assert np.max(np.abs(f)) == pytest.approx(1.0)


def test_prop25_pair_meets_premise():
    rng = np.random.default_rng(3)
    grid = unit_square(9, 10)
    for _ in range(5):
        op, op2 = prop25_pair(rng, grid)
        delta = np.max(np.hypot(op2.b_q - op.b_q, op2.b_p - op.b_p)[1:, 1:-1])
        assert delta**2 <= op2.drift_sup() * op.meta["a0"] + 1e-12


def test_suite_result_bookkeeping():
    res = SuiteResult("x", 0, 0)
    res.record(0.5, {"t": 0})
    res.record(-0.1, {"t": 1})
    assert res.failures == 1 and res.worst_margin == -0.1 and res.failing == [{"t": 1}]
    assert not res.passed and res.to_dict()["passed"] is False


def test_eigen_props_suite_passes():
    assert run_eigen_props(3, seed=2).passed


def test_negative_control_is_consistent():
    res = run_max_principle(10, seed=0, inject_negative=True)
    assert res.passed
    assert res.notes["laplacian+25"]["witness"] is not None
    assert res.notes["laplacian+25"]["lambda1"] < 0


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope", 1, 0)
