import math

import numpy as np
import pytest

import gelfandlab as gl
from gelfandlab.errors import AdmissibilityError, ValidationError
from gelfandlab.potentials import (
    interpolate_smooth_decreasing,
    piecewise_constant_potential,
    potential_from_dict,
    potential_to_dict,
)
from gelfandlab.serialize import canonical_json

L10 = 16.0  # borderline level 2(N-2) at N = 10


def test_window_levels():
    spec = gl.window_potential(0.25, 0.5, 10)
    assert spec.c(np.array([math.log(0.3)]))[0] == L10
    assert spec.c(np.array([math.log(0.6)]))[0] == 0.0
    assert spec.c(np.array([math.log(0.1)]))[0] == 0.0


def test_window_degenerate_limit_is_borderline():
    spec = gl.window_potential(0.0, 1.0, 10)
    assert spec.form == "borderline"
    assert spec.c(np.array([-3.0]))[0] == L10


def test_window_breakpoints_deep_edge():
    A = 0.5 * math.exp(-8.0)
    spec = gl.window_potential(A, 0.5, 10)
    assert spec.breakpoints[0] == pytest.approx(-8.693147180559945, abs=1e-12)
    assert spec.breakpoints[1] == pytest.approx(-0.6931471805599453, abs=1e-15)


def test_window_needs_ten_dimensions():
    with pytest.raises(AdmissibilityError):
        gl.window_potential(0.25, 0.5, 9)


def test_window_degenerate_interval_rejected():
    with pytest.raises(ValidationError):
        gl.window_potential(0.5, 0.5, 10)


# -- oscillatory schedule ------------------------------------------------------


def test_single_stage_schedule_values():
    _, sched = gl.build_oscillatory("inv_r2", 10, 1)
    st = sched.stages[0]
    assert st.tx == 0.0
    assert st.tg == pytest.approx(-1.0, abs=1e-15)
    y_max = math.exp(-1.0) / math.sqrt(2 * L10)
    assert math.exp(st.ty) == pytest.approx(y_max / 2, rel=1e-13)
    assert math.exp(st.ty) == pytest.approx(0.032516, rel=1e-4)
    assert math.exp(sched.tx_final) == pytest.approx(0.016258, rel=1e-4)


def test_zero_stages_is_borderline():
    spec, sched = gl.build_oscillatory("inv_r2", 10, 0)
    assert spec.form == "borderline"
    assert sched.stages == ()


def test_inverse_r_target_selection():
    _, sched = gl.build_oscillatory("inv_r", 10, 1)
    y_max = math.exp(-2.0) / (2 * L10)
    assert y_max == pytest.approx(0.00422923, rel=1e-5)
    assert math.exp(sched.stages[0].ty) == pytest.approx(y_max / 2, rel=1e-13)


def test_stage_point_identities_exact(deep_oscillatory):
    spec, sched, _, _, _ = deep_oscillatory
    for st in sched.stages:
        n = st.index
        c_tx = spec.c(np.array([st.tx]))[0]
        assert abs(c_tx - L10) <= 4 * np.finfo(float).eps * L10
        # Psi(y_n)/phi(y_n) = 1/(n+1): log c(ty) - (2 ty + log phi(y)); the
        # grouping keeps the huge log-radius terms cancelling exactly
        log_ratio = math.log(spec.c(np.array([st.ty]))[0]) \
            - (2 * st.ty + st.log_phi_at_y)
        assert abs(math.exp(log_ratio) * (n + 1) - 1.0) < 1e-13


def test_schedule_chain_invariant(deep_oscillatory):
    _, sched, _, _, _ = deep_oscillatory
    prev_tx = None
    for st in sched.stages:
        assert st.ty < st.tg < st.tx
        if prev_tx is not None:
            assert st.tx < prev_tx
        prev_tx = st.tx
    assert sched.tx_final < sched.stages[-1].ty
    sched.validate()


def test_selection_rule_inequality(deep_oscillatory):
    _, sched, _, _, _ = deep_oscillatory
    for st in sched.stages:
        thresh = math.log((st.index + 1) * L10) - 2 * st.tg
        assert st.log_phi_at_y > thresh


def test_stage_overflow_reports_feasible_count():
    with pytest.raises(ValidationError, match="maximal feasible stage count is 2"):
        gl.build_oscillatory("inv_r2", 10, 3)


def test_oscillatory_psi_strictly_decreasing(deep_oscillatory):
    spec, _, grid, _, _ = deep_oscillatory
    t = grid.nodes
    log_psi = np.log(spec.c(t)) - 2 * t
    assert np.all(np.diff(log_psi) < 0)


def test_oscillatory_admissible(deep_oscillatory):
    spec, _, grid, _, _ = deep_oscillatory
    lo, hi = spec.segments.sampled_range(grid.t_min)
    assert lo > 0
    assert hi <= L10 * (1 + 1e-14)


def test_phi_above_envelope_is_clipped():
    spec, sched = gl.build_oscillatory("power:2,100", 10, 1)
    assert sched.phi_clipped
    lo, hi = spec.segments.sampled_range(-10.0)
    assert hi <= L10 * (1 + 1e-14)
    sched.validate()


def test_custom_callable_phi():
    # slowly growing target, non-monotone declared: grid-scan selection
    spec, sched = gl.build_oscillatory(lambda t: math.log(1 + t * t), 10, 1)
    sched.validate()
    assert spec.strictly_decreasing


# -- blend ------------------------------------------------------------------------


def test_blend_stage_values(blend10_built):
    _, sched, spec = blend10_built
    for st in sched.stages:
        assert spec.c(np.array([st.tx]))[0] == pytest.approx(16.0, abs=1e-10)
    ty2 = sched.stages[1].ty
    assert spec.c(np.array([ty2]))[0] == pytest.approx(8.0 + 8.0 / 3.0, abs=1e-8)


def test_blend_admissible_and_decreasing(blend10_built):
    _, _, spec = blend10_built
    t_min = min(spec.breakpoints) - 5.0
    lo, hi = spec.segments.sampled_range(t_min)
    assert 8.0 - 1e-12 <= lo and hi <= 16.0 + 1e-12
    ts = np.linspace(t_min, 0.0, 40001)
    log_psi = np.log(spec.c(ts)) - 2 * ts
    assert np.all(np.diff(log_psi) < 0)


def test_blend_degenerate_constant():
    spec = gl.blend(16.0, 16.0, None, 10)
    assert spec.c(np.array([-7.0]))[0] == 16.0
    assert spec.strictly_decreasing


def test_blend_validation():
    inner, _ = gl.build_oscillatory("borderline", 10, 1)
    with pytest.raises(AdmissibilityError):
        gl.blend(8.0, 17.0, inner, 10)   # C2 above Hardy at N = 10
    with pytest.raises(ValidationError):
        gl.blend(10.0, 9.0, inner, 10)   # C1 > C2 (C2 below borderline too)
    with pytest.raises(ValidationError):
        gl.blend(8.0, 16.0, gl.borderline_potential(10), 10)  # inner not oscillatory


def test_blend_wide_range_at_n12():
    inner, sched = gl.build_oscillatory("borderline", 12, 1)
    spec = gl.blend(5.0, 22.0, inner, 12)
    assert spec.c(np.array([sched.stages[0].tx]))[0] == pytest.approx(22.0, abs=1e-10)
    dip = spec.c(np.array([sched.stages[0].ty]))[0]
    assert dip == pytest.approx(5.0 + 17.0 / 2.0, abs=1e-8)


# -- generic monotone join ----------------------------------------------------------


def test_join_constant_segment():
    seg = interpolate_smooth_decreasing((0.0, 5.0, (0.0,)), (1.0, 5.0, (0.0,)))
    ts = np.linspace(0, 1, 50)
    assert np.max(np.abs(seg(ts) - 5.0)) < 1e-12


def test_join_monotone_within_bounds():
    seg = interpolate_smooth_decreasing((0.0, 16.0, (0.0,)), (1.0, 4.0, (0.0,)),
                                        bounds=(4.0, 16.0))
    ts = np.linspace(0, 1, 500)
    vals = seg(ts)
    assert np.all(np.diff(vals) <= 1e-12)
    assert vals.min() >= 4.0 - 1e-9 and vals.max() <= 16.0 + 1e-9


def test_join_matches_derivative_data_of_decaying_curve():
    # second-order contact with 16 e^{-2t} at the left end
    f = lambda t: 16.0 * math.exp(-2.0 * t)
    seg = interpolate_smooth_decreasing(
        (0.0, f(0.0), (-2.0 * f(0.0), 4.0 * f(0.0))),
        (2.0, f(2.0), (-2.0 * f(2.0), 4.0 * f(2.0))))
    eps = 1e-3
    taylor = f(0.0) - 2.0 * f(0.0) * eps + 2.0 * f(0.0) * eps * eps
    assert seg(np.array([eps]))[0] == pytest.approx(taylor, rel=1e-7)
    assert seg(np.array([2.0]))[0] == pytest.approx(f(2.0), rel=1e-12)


def test_join_rejects_impossible_monotone_data():
    # decreasing endpoints but strongly increasing slope demanded at left
    with pytest.raises(ValidationError):
        interpolate_smooth_decreasing((0.0, 1.0, (50.0,)), (1.0, 0.0, (0.0,)))


# -- piecewise-constant potentials ----------------------------------------------------


def test_piecewise_constant_levels():
    spec = piecewise_constant_potential([-4.0, -2.0], [1.0, 9.0, 4.0], 10)
    assert spec.c(np.array([-5.0]))[0] == 1.0
    assert spec.c(np.array([-3.0]))[0] == 9.0
    assert spec.c(np.array([-1.0]))[0] == 4.0
    with pytest.raises(AdmissibilityError):
        piecewise_constant_potential([-1.0], [0.0, 17.0], 10)


# -- serialization ---------------------------------------------------------------------


@pytest.mark.parametrize("make", [
    lambda: gl.zero_potential(10),
    lambda: gl.borderline_potential(10),
    lambda: gl.hardy_potential(12),
    lambda: gl.shifted_potential(1.0, 10),
    lambda: gl.window_potential(0.25, 0.5, 10),
    lambda: gl.build_oscillatory("inv_r2", 10, 2)[0],
    lambda: gl.blend(8.0, 16.0, gl.build_oscillatory("borderline", 10, 2)[0], 10),
])
def test_potential_json_round_trip(make):
    spec = make()
    data = potential_to_dict(spec)
    spec2 = potential_from_dict(data)
    t = np.linspace(max(min(spec.breakpoints, default=-20.0) - 5.0, -5e4), 0.0, 2001)
    assert np.array_equal(spec.c(t), spec2.c(t))
    assert canonical_json(data) == canonical_json(potential_to_dict(spec2))


def test_custom_phi_not_serializable():
    spec, _ = gl.build_oscillatory(lambda t: -2.0 * t, 10, 1)
    with pytest.raises(ValidationError):
        potential_to_dict(spec)


def test_shifted_level_validation():
    with pytest.raises(AdmissibilityError):
        gl.shifted_potential(20.0, 10)  # negative level
    spec = gl.shifted_potential(1.0, 10)
    assert spec.c(np.array([-1.0]))[0] == 15.0
