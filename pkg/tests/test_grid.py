import math

import numpy as np
import pytest

import gelfandlab as gl
from gelfandlab.errors import ValidationError
from gelfandlab.grid import integral_dr, profile_from_callable


def test_uniform_grid_node_count():
    grid = gl.make_log_grid(10, -5.0, 100, [])
    assert grid.size == 501
    assert grid.nodes[-1] == 0.0
    assert np.all(np.diff(grid.nodes) > 0)


def test_breakpoint_inserted_exactly():
    b = math.log(0.5)
    grid = gl.make_log_grid(10, -5.0, 100, [b])
    assert b in grid.nodes
    assert grid.breakpoints == (b,)


def test_deep_stage_grid_is_finite():
    # stage edges of the two-dip schedule span ~2.3e5 in t
    _, sched = gl.build_oscillatory("inv_r2", 10, 2)
    edges = [sched.tx_final]
    for st in sched.stages:
        edges += [st.tx, st.tg, st.ty]
    t_min = min(edges) - 10.0
    grid = gl.make_log_grid(10, t_min, 4, [e for e in edges if e > t_min and e < 0])
    assert np.all(np.isfinite(grid.nodes))
    assert grid.size > 900_000
    for e in edges:
        if t_min < e < 0:
            assert e in grid.nodes


def test_resolution_floor_two_nodes_per_decade():
    grid = gl.make_log_grid(10, -40.0, 0.1, [])
    assert np.max(np.diff(grid.nodes)) <= math.log(10.0) / 2.0 + 1e-12


@pytest.mark.parametrize("t_min, ppu, bps", [
    (0.5, 100, []),       # t_min must be negative
    (-np.inf, 100, []),   # non-finite
    (-5.0, 100, [1.0]),   # breakpoint outside range
    (-5.0, 100, [-6.0]),  # breakpoint below t_min
])
def test_grid_validation_errors(t_min, ppu, bps):
    with pytest.raises(ValidationError):
        gl.make_log_grid(10, t_min, ppu, bps)


# -- radial Laplacian ----------------------------------------------------------


def test_laplacian_torsion_profile():
    # roundoff amplification e^{-2t} eps/h^2 caps the depth at which a
    # constant-limit profile stays this accurate
    grid = gl.make_log_grid(10, -4.0, 100, [])
    u = profile_from_callable(grid, lambda t: (1 - np.exp(2 * t)) / 20.0)
    mlap = gl.radial_laplacian(u)
    assert np.max(np.abs(mlap.values - 1.0)) < 1e-7


def test_laplacian_log_profile():
    grid = gl.make_log_grid(10, -6.0, 100, [math.log(0.5)])
    u = profile_from_callable(grid, lambda t: -t)
    mlap = gl.radial_laplacian(u)
    at = np.nonzero(grid.nodes == math.log(0.5))[0][0]
    assert mlap.values[at] == pytest.approx(32.0, rel=1e-8)


def test_laplacian_linear_profile():
    grid = gl.make_log_grid(10, -6.0, 100, [math.log(0.5)])
    u = profile_from_callable(grid, lambda t: np.exp(t))
    mlap = gl.radial_laplacian(u)
    at = np.nonzero(grid.nodes == math.log(0.5))[0][0]
    assert mlap.values[at] == pytest.approx(-18.0, rel=1e-8)


@pytest.mark.parametrize("beta", [1.0, -1.0, -4.0])
def test_laplacian_power_law_invariant(beta):
    # -Delta r^beta = -beta (beta + N - 2) r^{beta-2}, N = 10
    grid = gl.make_log_grid(10, -8.0, 100, [])
    u = profile_from_callable(grid, lambda t: np.exp(beta * t))
    mlap = gl.radial_laplacian(u)
    t = grid.nodes[5:-5]
    want = -beta * (beta + 8.0) * np.exp((beta - 2.0) * t)
    got = mlap.values[5:-5]
    assert np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-30)) < 1e-6


def test_laplacian_records_breakpoint_jumps():
    b = math.log(0.5)
    grid = gl.make_log_grid(10, -4.0, 200, [b])
    u = profile_from_callable(grid, lambda t: np.where(t < b, np.exp(t), np.exp(2 * t)))
    mlap = gl.radial_laplacian(u)
    assert b in mlap.meta["breakpoint_jumps"]


def test_laplacian_too_coarse():
    grid = gl.LogRadialGrid(dim=10, nodes=np.array([-1.0, 0.0]))
    u = gl.RadialProfile(grid=grid, values=np.array([1.0, 1.0]))
    with pytest.raises(ValidationError):
        gl.radial_laplacian(u)


# -- inward integration ---------------------------------------------------------


def test_integrate_inward_constant():
    grid = gl.make_log_grid(10, -8.0, 100, [math.log(0.25)])
    u = gl.integrate_inward(profile_from_callable(grid, lambda t: np.ones_like(t)))
    at = np.nonzero(grid.nodes == math.log(0.25))[0][0]
    assert u.values[at] == pytest.approx(0.75, abs=1e-9)
    assert u.values[-1] == 0.0


def test_integrate_inward_inverse_radius():
    grid = gl.make_log_grid(10, -8.0, 100, [math.log(0.25)])
    u = gl.integrate_inward(profile_from_callable(grid, lambda t: np.exp(-t)))
    at = np.nonzero(grid.nodes == math.log(0.25))[0][0]
    assert u.values[at] == pytest.approx(math.log(4.0), rel=1e-9)


def test_integrate_inward_linear():
    grid = gl.make_log_grid(10, -8.0, 100, [math.log(0.5)])
    u = gl.integrate_inward(profile_from_callable(grid, lambda t: np.exp(t)))
    at = np.nonzero(grid.nodes == math.log(0.5))[0][0]
    assert u.values[at] == pytest.approx(0.375, abs=1e-9)


def test_integrate_inward_monotone_for_nonnegative():
    grid = gl.make_log_grid(10, -8.0, 100, [])
    u = gl.integrate_inward(profile_from_callable(grid, lambda t: np.exp(t) + 1.0))
    assert np.all(np.diff(u.values) < 0)


def test_inward_integral_then_differentiation_recovers_integrand():
    # du/dr = -w at the nodes to the quadrature order
    grid = gl.make_log_grid(10, -8.0, 100, [])
    w = profile_from_callable(grid, lambda t: 1.0 + np.exp(t) * np.sin(t) ** 2)
    u = gl.integrate_inward(w)
    t = grid.nodes
    # du/dr = e^{-t} du/dt; u carries exact slopes from the quadrature rule
    du_dr = np.exp(-t) * u.derivs
    rel = np.abs(du_dr + w.values) / np.abs(w.values)
    assert np.max(rel) < 1e-6


# -- quadrature and determinism ---------------------------------------------------


def test_integral_dr_oracle():
    # integral of r dr over (e^{-8}, 1)
    val = integral_dr(lambda t: np.exp(t), -8.0, 0.0)
    want = 0.5 * (1 - math.exp(-16.0))
    assert val == pytest.approx(want, rel=5e-9)


def test_integral_dr_rejects_bad_interval():
    with pytest.raises(ValidationError):
        integral_dr(lambda t: np.exp(t), 0.0, -1.0)


def test_operations_are_deterministic():
    psi = gl.window_potential(0.25, 0.5, 10)
    grid = gl.default_grid(psi)
    w1 = gl.solve_linearized(psi, grid)
    w2 = gl.solve_linearized(psi, grid)
    assert np.array_equal(w1.values, w2.values)
    assert np.array_equal(w1.derivs, w2.derivs)
    u1 = gl.integrate_inward(w1)
    u2 = gl.integrate_inward(w2)
    assert np.array_equal(u1.values, u2.values)
