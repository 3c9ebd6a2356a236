"""The linearized radial problem and its closed-form oracles.

In t = log r the problem

    -Delta w = (Psi - (N-1)/r^2) w,   w(r=1) = 1,

becomes W'' + (N-2) W' + (c(t) - (N-1)) W = 0 with c = r^2 Psi.  The
finite-energy solution is selected at the truncated inner end by imposing
the frozen-coefficient slope W'(t_min) = beta_plus(c(t_min)) W(t_min),
where beta_plus is the larger indicial root; the ODE is then integrated
outward and rescaled so that W(0) = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import linear_ode_solve
from .errors import AdmissibilityError, SolverFailure, ValidationError
from .grid import LogRadialGrid, RadialProfile, canonical_profile, make_log_grid
from .potentials import PotentialSpec, hardy_level

DEFAULT_RTOL = 1e-10
RESCALE_HI = 1e150
RESCALE_LO = 1e-150


@dataclass(frozen=True)
class PowerLawRoots:
    """Roots of the indicial equation beta^2 + (N-2) beta + (c - (N-1)) = 0."""

    c: float
    dim: int
    beta_plus: float
    beta_minus: float


def power_law_solution(c: float, dim: int) -> PowerLawRoots:
    if dim < 3:
        raise ValidationError("dimension must be >= 3")
    disc = dim * dim - 4.0 * c
    if disc < 0:
        raise ValidationError(
            f"c = {c:g} > N^2/4 = {dim * dim / 4:g}: oscillatory indicial regime, "
            "out of scope")
    root = math.sqrt(disc)
    return PowerLawRoots(c=float(c), dim=dim,
                         beta_plus=(2.0 - dim + root) / 2.0,
                         beta_minus=(2.0 - dim - root) / 2.0)


def default_grid(psi: PotentialSpec, points_per_unit_t: float | None = None,
                 t_min: float | None = None) -> LogRadialGrid:
    """Grid deep enough that c is constant below the last breakpoint."""
    bps = [b for b in psi.breakpoints if b < 0.0]
    if t_min is None:
        t_min = (min(bps) - 10.0) if bps else -40.0
    if points_per_unit_t is None:
        points_per_unit_t = 100.0 if -t_min <= 2000.0 else 4.0
    return make_log_grid(psi.dim, t_min, points_per_unit_t,
                         [b for b in bps if b > t_min])


def _kernel_arrays(psi: PotentialSpec, grid: LogRadialGrid):
    seg = psi.segments
    mids = 0.5 * (grid.nodes[:-1] + grid.nodes[1:])
    interval_seg = seg.locate(mids).astype(np.int32)
    return (np.ascontiguousarray(grid.nodes), interval_seg,
            np.ascontiguousarray(seg.code), np.ascontiguousarray(seg.a),
            np.ascontiguousarray(seg.b), np.ascontiguousarray(seg.tref),
            np.ascontiguousarray(seg.coef), np.ascontiguousarray(seg.deg))


def solve_linearized(psi: PotentialSpec, grid: LogRadialGrid,
                     rtol: float = DEFAULT_RTOL) -> RadialProfile:
    """Strictly positive solution profile with w(r=1) = 1 on the given grid."""
    if psi.dim != grid.dim:
        raise ValidationError("potential and grid dimensions differ")
    psi.check_admissible(grid.t_min)
    c0 = float(psi.c(np.array([grid.t_min]))[0])
    roots = power_law_solution(c0, grid.dim)
    nodes, iseg, code, a, b, tref, coef, deg = _kernel_arrays(psi, grid)
    w, dw, ls, nsteps, nreject, status = linear_ode_solve(
        nodes, iseg, code, a, b, tref, coef, deg, float(grid.dim),
        1.0, roots.beta_plus, rtol, RESCALE_HI, RESCALE_LO)
    if status == 2:
        raise SolverFailure("linear solver produced a non-finite state")
    if status == 1 or np.any(w <= 0.0):
        raise SolverFailure(
            "solution lost positivity during integration; this contradicts the "
            "positivity guarantee and signals a solver failure")
    logw = np.log(w) + ls
    logw = logw - logw[-1]          # normalize w(t=0) = 1
    lslope = dw / w                 # d(log W)/dt, scale-free
    prof = canonical_profile(grid, logw, lslope,
                             meta={"potential": psi.form, "rtol": rtol,
                                   "nsteps": int(nsteps), "nreject": int(nreject),
                                   "beta_start": roots.beta_plus})
    # exact unit boundary value (the log normalization already guarantees ~1)
    prof.values[-1] = 1.0
    return prof


def boundary_slope(psi: PotentialSpec, grid: LogRadialGrid | None = None,
                   rtol: float = DEFAULT_RTOL) -> float:
    """w'(r = 1) of the solved profile (equals dW/dt at t = 0)."""
    if grid is None:
        grid = default_grid(psi)
    prof = solve_linearized(psi, grid, rtol=rtol)
    return float(prof.derivs[-1])


# -- closed-form window solution ------------------------------------------------


def closed_form_window(A: float, B: float, dim: int, r):
    """The three-piece closed-form solution for the window potential.

    Continuous and C^1 at r = A and r = B; defined for 0 < r <= 1.
    """
    if A <= 0 or not A < B or B > 1.0:
        raise ValidationError("need 0 < A < B <= 1")
    if dim < 10:
        raise AdmissibilityError("window closed form needs N >= 10")
    N = float(dim)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0) or np.any(r_arr > 1.0):
        raise ValidationError("radius outside (0, 1]")
    den = ((N - 2.0) ** 2 * B ** (N - 4) - 4.0 * A ** (N - 4)
           + 2.0 * (N - 2.0) * B ** N * (B ** (N - 4) - A ** (N - 4)))
    out = np.empty_like(r_arr)
    inner = r_arr < A
    midd = (r_arr >= A) & (r_arr <= B)
    outer = r_arr > B
    out[inner] = N * (N - 4.0) * B ** (N - 2) * A ** (-2.0) * r_arr[inner] / den
    rm = r_arr[midd]
    out[midd] = (N * (N - 2.0) * B ** (N - 2) / rm
                 - 2.0 * N * A ** (N - 4) * B ** (N - 2) * rm ** (3.0 - N)) / den
    ro = r_arr[outer]
    out[outer] = (((N - 2.0) ** 2 * B ** (N - 4) - 4.0 * A ** (N - 4)) * ro
                  + 2.0 * (N - 2.0) * B ** N * (B ** (N - 4) - A ** (N - 4))
                  * ro ** (1.0 - N)) / den
    return out if np.ndim(r) else float(out[0])


def closed_form_window_log(A_log: float, B: float, dim: int, t):
    """log of the window closed form, with the inner edge given as log A.

    Stable when A underflows linear representation; only needs t <= log B
    handled piecewise in log space.
    """
    N = float(dim)
    tB = math.log(B)
    an4 = math.exp((N - 4.0) * A_log)
    den = ((N - 2.0) ** 2 * B ** (N - 4) - 4.0 * an4
           + 2.0 * (N - 2.0) * B ** N * (B ** (N - 4) - an4))
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t_arr)
    inner = t_arr < A_log
    midd = (t_arr >= A_log) & (t_arr <= tB)
    outer = t_arr > tB
    out[inner] = (math.log(N * (N - 4.0)) + (N - 2.0) * math.log(B)
                  - 2.0 * A_log + t_arr[inner] - math.log(den))
    tm = t_arr[midd]
    val = (N * (N - 2.0) * B ** (N - 2) * np.exp(-tm)
           - 2.0 * N * an4 * B ** (N - 2) * np.exp((3.0 - N) * tm))
    out[midd] = np.log(val) - math.log(den)
    to = t_arr[outer]
    val = (((N - 2.0) ** 2 * B ** (N - 4) - 4.0 * an4) * np.exp(to)
           + 2.0 * (N - 2.0) * B ** N * (B ** (N - 4) - an4) * np.exp((1.0 - N) * to))
    out[outer] = np.log(val) - math.log(den)
    return out if np.ndim(t) else float(out[0])


# -- comparison principle as a checkable utility ----------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    max_diff: float        # max over nodes of w1 - w2 (linear scale)
    argmax_t: float
    max_log_ratio: float   # max over nodes of log w1 - log w2
    slack: float
    n_nodes: int

    @property
    def passed(self) -> bool:
        return self.max_diff <= self.slack and self.max_log_ratio <= 1e-10


def compare_potentials(psi1: PotentialSpec, psi2: PotentialSpec, grid: LogRadialGrid,
                       slack: float = 1e-8, rtol: float = DEFAULT_RTOL,
                       ) -> ComparisonReport:
    """Solve both problems and report the worst violation of w1 <= w2."""
    c1 = psi1.c(grid.nodes)
    c2 = psi2.c(grid.nodes)
    bad = np.nonzero(c1 > c2 + 1e-12)[0]
    if bad.size:
        k = int(bad[0])
        raise AdmissibilityError(
            f"potential ordering violated at node t = {grid.nodes[k]:.17g} "
            f"(c1 = {c1[k]:.17g} > c2 = {c2[k]:.17g})")
    w1 = solve_linearized(psi1, grid, rtol=rtol)
    w2 = solve_linearized(psi2, grid, rtol=rtol)
    l1 = w1.log_values()
    l2 = w2.log_values()
    log_ratio = l1 - l2
    safe = np.maximum(l1, l2) < 700.0
    diff = np.full(grid.size, -np.inf)
    diff[safe] = np.exp(l1[safe]) - np.exp(l2[safe])
    if np.any(~safe):
        over = ~safe & (log_ratio > 1e-10)
        diff[over] = np.inf
    k = int(np.argmax(diff))
    return ComparisonReport(max_diff=float(diff[k]), argmax_t=float(grid.nodes[k]),
                            max_log_ratio=float(np.max(log_ratio)), slack=slack,
                            n_nodes=grid.size)


def hardy_admissible_ceiling(dim: int) -> float:
    return hardy_level(dim)


# -- seeded comparison sweep ---------------------------------------------------------


def random_ordered_pair(rng: np.random.Generator, dim: int, t_min: float):
    """A random admissible ordered pair of piecewise-constant potentials.

    Levels are quantized to integers in [0, Hardy] and segments are at
    least half a t-unit long, so an actual ordering gap always dominates
    the solver noise; roughly one pair in eight is exactly equal.
    """
    from .potentials import piecewise_constant_potential

    ceiling = int(hardy_level(dim))
    n_cuts = int(rng.integers(1, 4))
    cuts = np.sort(rng.choice(np.arange(t_min + 0.5, -0.4, 0.5), size=n_cuts,
                              replace=False))
    lo = rng.integers(0, ceiling + 1, size=n_cuts + 1)
    if rng.random() < 0.125:
        gap = np.zeros(n_cuts + 1, dtype=int)
    else:
        gap = rng.integers(0, 3, size=n_cuts + 1)
        if not np.any(gap):
            gap[int(rng.integers(0, n_cuts + 1))] = 1
    hi = np.minimum(lo + gap, ceiling)
    p1 = piecewise_constant_potential(cuts, lo.astype(float), dim)
    p2 = piecewise_constant_potential(cuts, hi.astype(float), dim)
    return p1, p2


def comparison_sweep(dim: int = 10, n_pairs: int = 100, seed: int = 20250810,
                     t_min: float = -8.0, points_per_unit_t: float = 50.0,
                     slack: float = 1e-8) -> dict:
    """Seeded sweep of the comparison principle over random admissible pairs.

    Returns a report with the violation count and the worst observed excess
    of w1 over w2 (which the principle says must stay within `slack`).
    """
    rng = np.random.default_rng(seed)
    worst = -math.inf
    worst_pair = None
    violations = 0
    identical = 0
    for k in range(n_pairs):
        p1, p2 = random_ordered_pair(rng, dim, t_min)
        if p1.params["levels"] == p2.params["levels"]:
            identical += 1
        edges = sorted(set(p1.breakpoints) | set(p2.breakpoints))
        grid = make_log_grid(dim, t_min, points_per_unit_t, edges)
        rep = compare_potentials(p1, p2, grid, slack=slack)
        if rep.max_diff > worst:
            worst = rep.max_diff
            worst_pair = k
        if not rep.passed:
            violations += 1
    return {
        "dim": dim,
        "n_pairs": n_pairs,
        "seed": seed,
        "t_min": t_min,
        "points_per_unit_t": points_per_unit_t,
        "slack": slack,
        "violations": violations,
        "identical_pairs": identical,
        "worst_diff": worst,
        "worst_pair_index": worst_pair,
    }
