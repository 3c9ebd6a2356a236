import pytest

import gelfandlab as gl
from gelfandlab.reconstruct import reconstruct_nonlinearity


@pytest.fixture(scope="session")
def borderline10():
    """Solved borderline profile at N = 10 plus its reconstruction."""
    psi = gl.borderline_potential(10)
    grid = gl.default_grid(psi)
    omega = gl.solve_linearized(psi, grid)
    table = reconstruct_nonlinearity(omega, psi)
    return psi, grid, omega, table


@pytest.fixture(scope="session")
def hardy12():
    psi = gl.hardy_potential(12)
    grid = gl.default_grid(psi)
    omega = gl.solve_linearized(psi, grid)
    table = reconstruct_nonlinearity(omega, psi)
    return psi, grid, omega, table


@pytest.fixture(scope="session")
def deep_oscillatory():
    """K = 2 oscillatory construction with phi = 1/r^2 at N = 10, solved on
    its (deep) default grid and reconstructed."""
    spec, sched = gl.build_oscillatory("inv_r2", 10, 2)
    grid = gl.default_grid(spec)
    omega = gl.solve_linearized(spec, grid)
    table = reconstruct_nonlinearity(omega, spec)
    return spec, sched, grid, omega, table


@pytest.fixture(scope="session")
def blend10_built():
    inner, sched = gl.build_oscillatory("borderline", 10, 2)
    spec = gl.blend(8.0, 16.0, inner, 10)
    return inner, sched, spec
