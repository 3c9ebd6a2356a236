import math

import numpy as np
import pytest

import gelfandlab as gl
from gelfandlab.errors import AdmissibilityError, SolverFailure, ValidationError
from gelfandlab.linear import (
    closed_form_window,
    closed_form_window_log,
    comparison_sweep,
    random_ordered_pair,
)
from gelfandlab.potentials import piecewise_constant_potential

# window closed-form spot values, frozen from high-precision evaluation of the
# three-piece formula
W_25_50_N10_AT_75 = 0.7530227125815425
W_25_50_N10_AT_10 = 0.3752762921309711
W_25_50_N10_SLOPE = 3.752762921309711
W_25_50_N10_AT_A = 0.9381907303274276
W_25_50_N10_AT_B = 0.6230172818580574
W_10_30_N12_AT_50 = 0.5002175932234617
W_10_30_N12_AT_20 = 0.5395813572863696
W_10_30_N12_AT_05 = 0.4320025878508541
W_DEEP_N10_AT_75 = 0.7530676824445593


def test_power_law_examples():
    assert gl.power_law_solution(0.0, 10).beta_plus == pytest.approx(1.0, abs=1e-15)
    assert gl.power_law_solution(16.0, 10).beta_plus == pytest.approx(-1.0, abs=1e-15)
    r = gl.power_law_solution(15.0, 10)
    assert r.beta_plus == pytest.approx(-4.0 + math.sqrt(10.0), abs=1e-14)
    assert r.beta_plus == pytest.approx(-0.837722, abs=1e-6)
    r = gl.power_law_solution(25.0, 12)
    assert r.beta_plus == pytest.approx(-5.0 + math.sqrt(11.0), abs=1e-14)
    assert r.beta_plus == pytest.approx(-1.683375, abs=1e-6)


def test_power_law_invariants():
    rng = np.random.default_rng(7)
    for _ in range(200):
        N = int(rng.integers(3, 15))
        c = float(rng.uniform(0.0, N * N / 4.0))
        r = gl.power_law_solution(c, N)
        assert r.beta_plus >= r.beta_minus
        # root identities of beta^2 + (N-2) beta + (c - (N-1)) = 0
        assert r.beta_plus + r.beta_minus == pytest.approx(2.0 - N, rel=1e-12)
        assert r.beta_plus * r.beta_minus == pytest.approx(c - (N - 1.0),
                                                           rel=1e-10, abs=1e-10)


def test_power_law_complex_regime_rejected():
    with pytest.raises(ValidationError):
        gl.power_law_solution(26.0, 10)


@pytest.mark.parametrize("dim", [10, 12])
@pytest.mark.parametrize("level", ["zero", "borderline", "shifted", "hardy"])
def test_solver_matches_power_law(dim, level):
    psi = {
        "zero": lambda: gl.zero_potential(dim),
        "borderline": lambda: gl.borderline_potential(dim),
        "shifted": lambda: gl.shifted_potential(1.0, dim),
        "hardy": lambda: gl.hardy_potential(dim),
    }[level]()
    grid = gl.default_grid(psi)
    w = gl.solve_linearized(psi, grid)
    beta = gl.power_law_solution(float(psi.c(np.array([-1.0]))[0]), dim).beta_plus
    rel = np.abs(np.expm1(w.log_values() - beta * grid.nodes))
    assert np.max(rel) < 1e-6


def test_borderline_value_at_half():
    psi = gl.borderline_potential(10)
    w = gl.solve_linearized(psi, gl.default_grid(psi))
    assert float(w(math.log(0.5))[0]) == pytest.approx(2.0, rel=1e-9)


def test_hardy12_value_at_half():
    psi = gl.hardy_potential(12)
    w = gl.solve_linearized(psi, gl.default_grid(psi))
    beta = -5.0 + math.sqrt(11.0)
    assert float(w(math.log(0.5))[0]) == pytest.approx(0.5 ** beta, rel=1e-9)
    assert 0.5 ** beta == pytest.approx(3.2119, rel=1e-4)


def test_normalization_is_exact():
    psi = gl.window_potential(0.25, 0.5, 10)
    w = gl.solve_linearized(psi, gl.default_grid(psi))
    assert w.values[-1] == 1.0
    assert np.all(w.values > 0)


# -- closed-form window oracle ------------------------------------------------------


def test_window_closed_form_values():
    assert closed_form_window(0.25, 0.5, 10, 0.75) == pytest.approx(
        W_25_50_N10_AT_75, rel=1e-14)
    assert closed_form_window(0.25, 0.5, 10, 0.10) == pytest.approx(
        W_25_50_N10_AT_10, rel=1e-14)
    assert closed_form_window(0.25, 0.5, 10, 0.10) / 0.10 == pytest.approx(
        W_25_50_N10_SLOPE, rel=1e-13)
    assert closed_form_window(0.1, 0.3, 12, 0.5) == pytest.approx(
        W_10_30_N12_AT_50, rel=1e-14)
    assert closed_form_window(0.1, 0.3, 12, 0.2) == pytest.approx(
        W_10_30_N12_AT_20, rel=1e-14)
    assert closed_form_window(0.1, 0.3, 12, 0.05) == pytest.approx(
        W_10_30_N12_AT_05, rel=1e-14)


def test_window_closed_form_continuity():
    for (A, B, N) in [(0.25, 0.5, 10), (0.1, 0.3, 12)]:
        for edge in (A, B):
            below = closed_form_window(A, B, N, edge * (1 - 1e-9))
            above = closed_form_window(A, B, N, edge * (1 + 1e-9))
            assert below == pytest.approx(above, rel=1e-7)
    # value at A for the reference case
    assert closed_form_window(0.25, 0.5, 10, 0.25) == pytest.approx(
        W_25_50_N10_AT_A, rel=1e-13)
    assert closed_form_window(0.25, 0.5, 10, 0.5) == pytest.approx(
        W_25_50_N10_AT_B, rel=1e-13)


def test_window_closed_form_c1_at_edges():
    A, B, N = 0.25, 0.5, 10
    for edge in (A, B):
        h = 1e-6
        dm = (closed_form_window(A, B, N, edge) -
              closed_form_window(A, B, N, edge - h)) / h
        dp = (closed_form_window(A, B, N, edge + h) -
              closed_form_window(A, B, N, edge)) / h
        assert dm == pytest.approx(dp, rel=1e-4)


def test_window_closed_form_validation():
    with pytest.raises(ValidationError):
        closed_form_window(0.5, 0.5, 10, 0.7)
    with pytest.raises(ValidationError):
        closed_form_window(-0.1, 0.5, 10, 0.7)
    with pytest.raises(AdmissibilityError):
        closed_form_window(0.25, 0.5, 9, 0.7)


def test_window_log_form_matches_linear():
    A, B, N = 0.25, 0.5, 10
    t = np.linspace(math.log(A) - 3, 0.0, 500)
    lin = closed_form_window(A, B, N, np.exp(t))
    logf = closed_form_window_log(math.log(A), B, N, t)
    assert np.max(np.abs(np.expm1(logf - np.log(lin)))) < 1e-12


@pytest.mark.parametrize("A,B,N", [(0.25, 0.5, 10), (0.1, 0.3, 12),
                                   (0.5 * math.exp(-8.0), 0.5, 10)])
def test_solver_matches_window_closed_form(A, B, N):
    psi = gl.window_potential(A, B, N)
    grid = gl.default_grid(psi)
    w = gl.solve_linearized(psi, grid)
    oracle = closed_form_window_log(math.log(A), B, N, grid.nodes)
    rel = np.abs(np.expm1(w.log_values() - oracle))
    assert np.max(rel) < 1e-6


def test_deep_window_spot_value():
    A = 0.5 * math.exp(-8.0)
    psi = gl.window_potential(A, 0.5, 10)
    w = gl.solve_linearized(psi, gl.default_grid(psi))
    assert float(w(math.log(0.75))[0]) == pytest.approx(W_DEEP_N10_AT_75, rel=1e-8)


# -- comparison principle -------------------------------------------------------------


def test_compare_zero_vs_window():
    g = gl.make_log_grid(10, -10.0, 100, [math.log(0.25), math.log(0.5),
                                          math.log(0.75)])
    rep = gl.compare_potentials(gl.zero_potential(10),
                                gl.window_potential(0.25, 0.5, 10), g)
    assert rep.passed
    w1 = gl.solve_linearized(gl.zero_potential(10), g)
    at = np.nonzero(g.nodes == math.log(0.75))[0][0]
    assert w1.values[at] == pytest.approx(0.75, rel=1e-9)
    assert closed_form_window(0.25, 0.5, 10, 0.75) >= 0.75


def test_compare_window_vs_borderline():
    g = gl.make_log_grid(10, -10.0, 100, [math.log(0.25), math.log(0.5),
                                          math.log(0.75)])
    rep = gl.compare_potentials(gl.window_potential(0.25, 0.5, 10),
                                gl.borderline_potential(10), g)
    assert rep.passed
    w2 = gl.solve_linearized(gl.borderline_potential(10), g)
    at = np.nonzero(g.nodes == math.log(0.75))[0][0]
    assert w2.values[at] == pytest.approx(4.0 / 3.0, rel=1e-9)
    assert W_25_50_N10_AT_75 <= 4.0 / 3.0


def test_compare_reflexive_is_exact():
    g = gl.make_log_grid(10, -10.0, 100, [math.log(0.25), math.log(0.5)])
    psi = gl.window_potential(0.25, 0.5, 10)
    rep = gl.compare_potentials(psi, psi, g)
    assert rep.max_diff == 0.0
    assert rep.max_log_ratio == 0.0


def test_compare_rejects_misordered_pair():
    g = gl.make_log_grid(10, -10.0, 100, [math.log(0.25), math.log(0.5)])
    with pytest.raises(AdmissibilityError, match="ordering violated at node"):
        gl.compare_potentials(gl.borderline_potential(10),
                              gl.window_potential(0.25, 0.5, 10), g)


def test_comparison_small_sweep_alt_seed():
    rep = comparison_sweep(n_pairs=20, seed=424242)
    assert rep["violations"] == 0
    assert rep["worst_diff"] <= 1e-8


def test_random_pair_generator_is_admissible():
    rng = np.random.default_rng(5)
    for _ in range(20):
        p1, p2 = random_ordered_pair(rng, 10, -8.0)
        t = np.linspace(-8.0, 0.0, 400)
        assert np.all(p1.c(t) <= p2.c(t) + 1e-12)
        assert np.all(p2.c(t) <= 16.0 + 1e-12)


# -- boundary slope -------------------------------------------------------------------


def test_boundary_slopes():
    assert gl.boundary_slope(gl.borderline_potential(10)) == pytest.approx(
        -1.0, abs=1e-8)
    assert gl.boundary_slope(gl.hardy_potential(12)) == pytest.approx(
        -5.0 + math.sqrt(11.0), abs=1e-8)
    assert gl.boundary_slope(gl.zero_potential(10)) == pytest.approx(1.0, abs=1e-8)


def test_boundary_slope_contracts():
    # >= -1 whenever c <= 2(N-2); >= 1 - N/2 + sqrt(N-1) whenever c <= Hardy
    s = gl.boundary_slope(gl.window_potential(0.25, 0.5, 10))
    assert s >= -1.0 - 1e-9
    s = gl.boundary_slope(gl.hardy_potential(10))
    assert s >= 1.0 - 5.0 + 3.0 - 1e-9


# -- admissibility gates -------------------------------------------------------------


def test_reject_above_hardy():
    psi = piecewise_constant_potential([-2.0], [0.0, 16.0], 10)
    over = gl.table_potential(np.linspace(-5, 0, 11), np.full(11, 17.0), 10)
    g = gl.make_log_grid(10, -10.0, 50, [-5.0, -2.0])
    with pytest.raises(AdmissibilityError):
        gl.solve_linearized(over, g)
    gl.solve_linearized(psi, g)  # borderline level itself is fine at N = 10


def test_reject_sign_changing_potential():
    bad = gl.table_potential(np.linspace(-5, 0, 11),
                             np.linspace(-1.0, 1.0, 11), 10)
    g = gl.make_log_grid(10, -10.0, 50, [-5.0])
    with pytest.raises(AdmissibilityError, match="negative"):
        gl.solve_linearized(bad, g)


def test_dimension_mismatch():
    g = gl.make_log_grid(12, -10.0, 50, [])
    with pytest.raises(ValidationError):
        gl.solve_linearized(gl.borderline_potential(10), g)
