import math

import numpy as np
import pytest

import gelfandlab as gl
from gelfandlab.errors import ValidationError
from gelfandlab.reconstruct import (
    check_condition_one,
    deep_value_trend,
    reconstruct_nonlinearity,
    verify_fprime_equals_psi,
)

SQRT11 = math.sqrt(11.0)
BETA12 = -5.0 + SQRT11          # Hardy-level exponent at N = 12
GAMMA12 = -(BETA12 + 1.0)
P12 = (1.0 - BETA12) / GAMMA12  # power of the reconstructed (1 + gamma s) law


def test_borderline_roundtrip_is_exponential(borderline10):
    _, _, _, table = borderline10
    assert table.f0 == pytest.approx(8.0, abs=1e-8)
    ss = np.linspace(0.0, 10.0, 501)
    rel = np.abs(table.f_eval(ss) / (8.0 * np.exp(2.0 * ss)) - 1.0)
    assert np.max(rel) < 1e-5
    assert float(table.f_eval(np.array([2.0]))[0]) == pytest.approx(
        8.0 * math.exp(4.0), rel=1e-6)
    assert table.audit.passed


def test_hardy12_roundtrip_power_law(hardy12):
    _, _, _, table = hardy12
    assert table.f0 == pytest.approx(6.0 + SQRT11, abs=1e-8)
    assert table.f0 == pytest.approx(9.316625, abs=1e-5)
    ss = np.linspace(0.0, 20.0, 301)
    want = (BETA12 + 11.0) * (1.0 + GAMMA12 * ss) ** P12
    rel = np.abs(table.f_eval(ss) / want - 1.0)
    assert np.max(rel) < 1e-6
    assert P12 == pytest.approx(3.92665, abs=1e-5)
    assert table.audit.passed


def test_hardy12_fprime_is_inverse_square(hardy12):
    psi, grid, _, table = hardy12
    # f'(u(r)) = 25 / r^2 along the construction
    t = grid.nodes
    got = table.log_fp[::-1]     # back in grid orientation
    want = math.log(25.0) - 2.0 * t
    assert np.max(np.abs(got - want)) < 1e-12


def test_torsion_flags_superlinearity(borderline10):
    psi = gl.zero_potential(10)
    grid = gl.make_log_grid(10, -12.0, 100, [])
    omega = gl.solve_linearized(psi, grid)
    table = reconstruct_nonlinearity(omega, psi)
    assert np.max(np.abs(table.f - 10.0)) < 1e-8
    assert table.audit.f0_positive
    assert table.audit.nondecreasing
    assert table.audit.convex
    assert not table.audit.superlinear
    assert not table.audit.passed
    assert table.audit.failing() == ["superlinear"]


def test_audit_rejects_zero_f0():
    from gelfandlab.reconstruct import analytic_table
    s = np.linspace(0.0, 5.0, 50)
    with np.errstate(divide="ignore"):
        log_f = np.log(s)  # f(0) = 0 exactly
    table = analytic_table(10, s, log_f, log_f, np.full_like(s, -np.inf), "bad")
    assert not table.audit.f0_positive
    assert table.audit.first_violation == 0


def test_audit_flags_nonmonotone_table():
    from gelfandlab.reconstruct import analytic_table
    s = np.linspace(0.0, 5.0, 50)
    log_f = np.sin(s)  # oscillating f
    table = analytic_table(10, s, log_f, np.zeros_like(s), np.zeros_like(s), "osc")
    assert not table.audit.nondecreasing
    assert table.audit.first_violation is not None


def test_check_condition_one_roundtrip(borderline10):
    _, _, _, table = borderline10
    audit = check_condition_one(table)
    assert audit.passed
    assert audit.details["fp_over_f_over_s"] == pytest.approx(2.0 * table.s_max,
                                                              rel=1e-6)


def test_f0_lower_bounds(borderline10, hardy12):
    # f(0) = w'(1) + (N-1) with w'(1) >= -1 below the borderline level and
    # w'(1) >= 1 - N/2 + sqrt(N-1) below the Hardy level
    _, _, _, tb = borderline10
    assert tb.f0 >= -1.0 + 9.0 - 1e-9
    _, _, _, th = hardy12
    assert th.f0 >= (1.0 - 6.0 + SQRT11) + 11.0 - 1e-9
    psi = gl.window_potential(0.25, 0.5, 10)
    omega = gl.solve_linearized(psi, gl.default_grid(psi))
    tw = reconstruct_nonlinearity(omega, psi)
    assert tw.f0 >= -1.0 + 9.0 - 1e-9


def test_chain_identity_contract(borderline10, hardy12):
    for psi, grid, omega, table in (borderline10, hardy12):
        err = verify_fprime_equals_psi(table, psi, table.u_profile)
        assert err <= 1e-6
        err_mid = verify_fprime_equals_psi(table, psi, table.u_profile,
                                           include_midpoints=True)
        assert err_mid <= 1e-6


def test_chain_identity_provenance_guard(borderline10):
    psi, _, _, table = borderline10
    with pytest.raises(ValidationError):
        verify_fprime_equals_psi(table, gl.hardy_potential(12), table.u_profile)


def test_convexity_of_deep_construction(deep_oscillatory):
    _, _, _, _, table = deep_oscillatory
    finite = np.isfinite(table.fpp)
    assert np.all(table.fpp[finite] > -1e-8)
    assert np.all(np.sign(table.fpp[~finite]) > 0)
    assert table.audit.passed


def test_second_derivative_positive_from_strict_decrease(borderline10):
    _, _, _, table = borderline10
    assert np.all(table.fpp[np.isfinite(table.fpp)] > 0)


def test_unboundedness_marker(deep_oscillatory):
    spec, _, _, _, _ = deep_oscillatory
    vals = deep_value_trend(spec, [-50.0, -100.0, -200.0, -400.0])
    diffs = np.diff(vals)
    assert np.all(diffs > 0)
    # growth does not flatten: the tail gains keep a fixed share of the total
    assert diffs[-1] >= 0.5 * diffs[0]


def test_extrapolation_must_be_explicit(borderline10):
    _, _, _, table = borderline10
    beyond = np.array([table.s_max * 1.5])
    with pytest.raises(ValidationError):
        table.f_eval(beyond)
    ext = table.with_extrapolation()
    got = float(ext.f_eval(beyond)[0])
    assert got == pytest.approx(8.0 * math.exp(2.0 * beyond[0]), rel=1e-3)
    assert "extrapolation" in ext.provenance


def test_negative_argument_rejected(borderline10):
    _, _, _, table = borderline10
    with pytest.raises(ValidationError):
        table.f_eval(np.array([-0.5]))


def test_reconstruction_requires_solved_profile():
    psi = gl.borderline_potential(10)
    grid = gl.make_log_grid(10, -10.0, 50, [])
    bare = gl.RadialProfile(grid=grid, values=np.exp(-grid.nodes))
    with pytest.raises(ValidationError):
        reconstruct_nonlinearity(bare, psi)
