"""gelfandlab: desk-scale numerics for radial extremal solutions of
-Delta u = lambda f(u) on the unit ball.

Core pieces: log-radius grids and radial calculus (`grid`), admissible
potential construction (`potentials`), the linearized solver and its
closed-form oracles (`linear`), nonlinearity reconstruction
(`reconstruct`), the nonlinear branch solver (`branch`), and quantitative
bound checks (`verify`).  Hot stepping loops run in a compiled extension
when available, with a pure-Python fallback selected at import.
"""

from ._backend import BACKEND as backend_name
from .grid import (
    LogRadialGrid,
    RadialProfile,
    integral_dr,
    integrate_inward,
    make_log_grid,
    radial_laplacian,
)
from .linear import (
    ComparisonReport,
    PowerLawRoots,
    boundary_slope,
    closed_form_window,
    compare_potentials,
    default_grid,
    power_law_solution,
    solve_linearized,
)
from .potentials import (
    OscillationSchedule,
    PotentialSpec,
    blend,
    borderline_level,
    borderline_potential,
    build_oscillatory,
    hardy_level,
    hardy_potential,
    interpolate_smooth_decreasing,
    make_phi,
    shifted_potential,
    table_potential,
    window_potential,
    zero_potential,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "LogRadialGrid",
    "RadialProfile",
    "integral_dr",
    "integrate_inward",
    "make_log_grid",
    "radial_laplacian",
    "ComparisonReport",
    "PowerLawRoots",
    "boundary_slope",
    "closed_form_window",
    "compare_potentials",
    "default_grid",
    "power_law_solution",
    "solve_linearized",
    "OscillationSchedule",
    "PotentialSpec",
    "blend",
    "borderline_level",
    "borderline_potential",
    "build_oscillatory",
    "hardy_level",
    "hardy_potential",
    "interpolate_smooth_decreasing",
    "make_phi",
    "shifted_potential",
    "table_potential",
    "window_potential",
    "zero_potential",
    "__version__",
]
