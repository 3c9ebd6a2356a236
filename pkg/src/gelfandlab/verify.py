"""Quantitative checks: the two-sided bound on r^2 lambda* f'(u*), the
window-potential integral bound, the stability quadratic form, and the
first Dirichlet eigenvalue of the ball.

The limsup/liminf statements are replaced by sliding-window extrema in t:
the report carries per-window sup/inf trends, never an extrapolated limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import eigsh

from ._backend import radial_shoot
from .errors import AuditFailure, SolverFailure, ValidationError
from .grid import LogRadialGrid, RadialProfile, integral_dr, make_log_grid
from .linear import closed_form_window_log, default_grid, solve_linearized
from .potentials import (
    PotentialSpec,
    blend,
    borderline_level,
    build_oscillatory,
    hardy_level,
    hardy_potential,
    zero_potential,
)
from .reconstruct import NonlinearityTable, analytic_table, reconstruct_nonlinearity

_EMPTY = np.empty(0)


# -- first Dirichlet eigenvalue ---------------------------------------------------


@dataclass(frozen=True)
class EigenResult:
    dim: int
    lambda1: float
    r_nodes: np.ndarray
    phi1: np.ndarray


def _eigen_shot(lam: float, dim: int, rtol: float, record_r=None) -> tuple:
    r0 = 1e-6
    v0 = 1.0 - lam * r0 * r0 / (2.0 * dim)
    dv0 = -lam * r0 / dim
    rec = record_r if record_r is not None else _EMPTY
    r, v, dv, v_rec, dv_rec, nsteps, status = radial_shoot(
        2, lam, _EMPTY, _EMPTY, _EMPTY, 0, 0.0, 0.0, float(dim),
        r0, v0, dv0, 1.0, 0, 0.0, rtol, 1e-14, 1e-14, rec)
    if status != 0:
        raise SolverFailure("eigen shooting failed")
    return v, v_rec


def first_eigenvalue(dim: int, rtol: float = 1e-10, n_profile: int = 1001,
                     ) -> EigenResult:
    """lambda_1 of -Delta v = lambda v on the unit ball, Dirichlet data.

    Shooting from the regular Taylor start; bisection on the sign of v(1)
    over the bracket [0, 4 N^2], refined to 1e-8 relative.
    """
    if dim < 1:
        raise ValidationError("dimension must be >= 1")
    lam1, _ = _eigen_bisect(int(dim), rtol)
    rec = np.linspace(1e-6, 1.0, n_profile)
    _, phi = _eigen_shot(lam1, dim, rtol, record_r=rec)
    return EigenResult(dim=dim, lambda1=lam1, r_nodes=rec, phi1=phi)


@lru_cache(maxsize=64)
def _eigen_bisect(dim: int, rtol: float) -> tuple[float, int]:
    hi_cap = 4.0 * dim * dim
    step = max(1.0, dim * dim / 40.0)
    lo = 0.5
    v_lo, _ = _eigen_shot(lo, dim, rtol)
    hi = lo + step
    nshots = 1
    while hi <= hi_cap:
        v_hi, _ = _eigen_shot(hi, dim, rtol)
        nshots += 1
        if v_lo * v_hi < 0:
            break
        lo, v_lo = hi, v_hi
        hi += step
    else:
        raise SolverFailure("no Dirichlet eigenvalue found below 4 N^2")
    while (hi - lo) > 1e-8 * hi:
        mid = 0.5 * (lo + hi)
        v_mid, _ = _eigen_shot(mid, dim, rtol)
        nshots += 1
        if v_lo * v_mid <= 0:
            hi = mid
        else:
            lo, v_lo = mid, v_mid
    return 0.5 * (lo + hi), nshots


# -- sliding-window extrema and the two-sided bound --------------------------------


@dataclass(frozen=True)
class WindowScan:
    anchors: np.ndarray      # window left ends (t)
    sups: np.ndarray
    infs: np.ndarray
    width: float


def sliding_window_extrema(t: np.ndarray, values: np.ndarray, width: float,
                           ) -> WindowScan:
    """Sup and inf of the samples over every window [t_i, t_i + width]."""
    n = t.size
    sups = np.empty(n)
    infs = np.empty(n)
    from collections import deque
    qmax: deque = deque()
    qmin: deque = deque()
    j = 0
    for i in range(n):
        hi = t[i] + width
        while j < n and t[j] <= hi:
            while qmax and values[qmax[-1]] <= values[j]:
                qmax.pop()
            qmax.append(j)
            while qmin and values[qmin[-1]] >= values[j]:
                qmin.pop()
            qmin.append(j)
            j += 1
        while qmax and qmax[0] < i:
            qmax.popleft()
        while qmin and qmin[0] < i:
            qmin.popleft()
        sups[i] = values[qmax[0]]
        infs[i] = values[qmin[0]]
    keep = t + width <= t[-1] + 1e-12
    if not np.any(keep):
        keep[-1] = True
    return WindowScan(anchors=t[keep], sups=sups[keep], infs=infs[keep], width=width)


@dataclass(frozen=True)
class VerificationReport:
    case_id: str
    dim: int
    lambda_star: float
    lambda1: float
    window: float
    depth: float
    pointwise_max: float
    pointwise_margin: float
    worst_window_sup: float
    lower_margin: float
    min_window_inf: float
    checks: dict
    trend: list = field(default_factory=list)
    grid: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "dim": self.dim,
            "lambda_star": self.lambda_star,
            "lambda1": self.lambda1,
            "window": self.window,
            "depth": self.depth,
            "pointwise_max": self.pointwise_max,
            "pointwise_margin": self.pointwise_margin,
            "worst_window_sup": self.worst_window_sup,
            "lower_margin": self.lower_margin,
            "min_window_inf": self.min_window_inf,
            "checks": self.checks,
            "passed": self.passed,
            "trend": self.trend,
            "grid": self.grid,
            "extras": self.extras,
        }


def bound_check(cstar: RadialProfile, lambda_star: float, dim: int,
                window: float = 5.0, depth: float = 0.0,
                lower_tol: float = 1e-6, case_id: str = "custom",
                ) -> VerificationReport:
    """Pointwise upper bound c* <= lambda_1 and the per-window lower bound
    sup c* >= 2(N-2) - lower_tol, over every width-`window` t-window below
    `depth`."""
    if lambda_star <= 0:
        raise ValidationError("lambda_star must be positive")
    t = cstar.grid.nodes
    if t[0] > -10.0:
        raise ValidationError("bound check needs a grid reaching t <= -10")
    vals = cstar.linear_values()
    lam1 = first_eigenvalue(dim).lambda1
    L = borderline_level(dim)

    sel = t <= -depth if depth > 0 else np.ones_like(t, dtype=bool)
    scan = sliding_window_extrema(t[sel], vals[sel], window)
    worst_sup = float(np.min(scan.sups))
    min_inf = float(np.min(scan.infs))
    pmax = float(np.max(vals))

    checks = {
        "pointwise_upper": {
            "passed": bool(pmax <= lam1 * (1 + 1e-9)),
            "margin": lam1 - pmax,
        },
        "windowed_lower": {
            "passed": bool(worst_sup >= L - lower_tol),
            "margin": worst_sup - L,
        },
    }
    stride = max(1, scan.anchors.size // 200)
    trend = [
        {"t": float(scan.anchors[i]), "sup": float(scan.sups[i]),
         "inf": float(scan.infs[i])}
        for i in range(0, scan.anchors.size, stride)
    ]
    return VerificationReport(
        case_id=case_id, dim=dim, lambda_star=lambda_star, lambda1=lam1,
        window=window, depth=depth, pointwise_max=pmax,
        pointwise_margin=lam1 - pmax, worst_window_sup=worst_sup,
        lower_margin=worst_sup - L, min_window_inf=min_inf, checks=checks,
        trend=trend, grid={"t_min": cstar.grid.t_min, "n_nodes": cstar.grid.size})


# -- window-potential integral bound ------------------------------------------------


@dataclass(frozen=True)
class IntegralBoundResult:
    s: float
    dim: int
    numeric: float
    bound: float
    inner_tail: float

    @property
    def passed(self) -> bool:
        return self.numeric >= self.bound


def window_integral_bound(s: float, dim: int, rtol: float = 1e-9,
                          ) -> IntegralBoundResult:
    """Numeric integral of the closed-form window solution for
    (A, B) = (s e^{-1/s^3}, s) against its closed-form lower bound."""
    if not 0 < s <= 1:
        raise ValidationError("need 0 < s <= 1")
    if dim < 10:
        raise ValidationError("window bound needs N >= 10")
    N = float(dim)
    tA = math.log(s) - s ** -3.0
    B = s
    numeric = integral_dr(lambda t: np.exp(closed_form_window_log(tA, B, dim, t)),
                          tA, 0.0, rtol=rtol)
    # exact integral of the linear inner piece over (0, A): slope * A^2 / 2,
    # where slope = N(N-4) B^{N-2} A^{-2} / D -- the A factors cancel
    an4 = math.exp((N - 4.0) * tA)
    den = ((N - 2.0) ** 2 * B ** (N - 4) - 4.0 * an4
           + 2.0 * (N - 2.0) * B ** N * (B ** (N - 4) - an4))
    tail = N * (N - 4.0) * B ** (N - 2) / (2.0 * den)
    bound = N * (N - 4.0) / (s * ((N - 2.0) ** 2 + 2.0 * (N - 2.0) * s ** N))
    return IntegralBoundResult(s=s, dim=dim, numeric=numeric + tail, bound=bound,
                               inner_tail=tail)


def window_integral_lower_bound(A: float, B: float, dim: int) -> float:
    """Closed-form lower bound N(N-4) B^2 log(B/A) / ((N-2)^2 + 2(N-2) B^N)
    for the inward integral of the window solution over general (A, B)."""
    if not 0 < A < B <= 1:
        raise ValidationError("need 0 < A < B <= 1")
    N = float(dim)
    return (N * (N - 4.0) * B * B * math.log(B / A)
            / ((N - 2.0) ** 2 + 2.0 * (N - 2.0) * B ** N))


# -- stability quadratic form ---------------------------------------------------------

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class StabilityResult:
    min_quotient: float
    n_nodes: int
    t_min: float
    dim: int

    @property
    def nonnegative(self) -> bool:
        return self.min_quotient >= -1e-8


def _c_evaluator(c_like, dim):
    if isinstance(c_like, PotentialSpec):
        return c_like.c, c_like.breakpoints
    if isinstance(c_like, RadialProfile):
        return (lambda t: np.asarray(c_like(t), dtype=float)), ()
    if callable(c_like):
        return (lambda t: np.asarray(c_like(np.atleast_1d(t)), dtype=float)), ()
    raise ValidationError("cannot evaluate the potential argument")


def stability_quadratic_form(c_like, dim: int, t_min: float = -60.0,
                             points_per_unit_t: float = 40.0) -> StabilityResult:
    """Minimum Rayleigh quotient of Q(xi) = int (xi'^2 - c xi^2/r^2) r^{N-1} dr
    over the hat-function space on the grid, hats vanishing at r_min and 1.

    In t the form reads int ((xi_t)^2 - c xi^2) e^{(N-2)t} dt against the
    mass int xi^2 e^{N t} dt; both are assembled element-exactly (8-point
    Gauss per element).  The depth is capped where the mass weight e^{N t}
    underflows double precision: deeper hats contribute nothing measurable
    to either integral.
    """
    c_fn, bps = _c_evaluator(c_like, dim)
    t_min = max(t_min, -600.0 / dim)
    grid = make_log_grid(dim, t_min, points_per_unit_t,
                         [b for b in bps if t_min < b < 0.0])
    t = grid.nodes
    n = t.size
    h = np.diff(t)
    # Gauss points per element, vectorized over elements
    mid = 0.5 * (t[:-1] + t[1:])
    half = 0.5 * h
    tg = mid[:, None] + half[:, None] * _GAUSS_X[None, :]
    wg = half[:, None] * _GAUSS_W[None, :]
    cg = c_fn(tg.ravel()).reshape(tg.shape)
    eL = (t[1:, None] - tg) / h[:, None]      # hat centered at the left node
    eR = (tg - t[:-1, None]) / h[:, None]
    wk = wg * np.exp((dim - 2.0) * tg)
    wm = wg * np.exp(dim * tg)

    kLL = np.sum(wk * (1.0 / h[:, None] ** 2 - cg * eL * eL), axis=1)
    kRR = np.sum(wk * (1.0 / h[:, None] ** 2 - cg * eR * eR), axis=1)
    kLR = np.sum(wk * (-1.0 / h[:, None] ** 2 - cg * eL * eR), axis=1)
    mLL = np.sum(wm * eL * eL, axis=1)
    mRR = np.sum(wm * eR * eR, axis=1)
    mLR = np.sum(wm * eL * eR, axis=1)

    # assemble over interior nodes 1..n-2
    diagK = kRR[:-1] + kLL[1:]
    offK = kLR[1:-1]
    diagM = mRR[:-1] + mLL[1:]
    offM = mLR[1:-1]
    nin = n - 2
    if nin < 3:
        raise ValidationError("grid too coarse for the quadratic form")
    K = diags([offK, diagK, offK], [-1, 0, 1], format="csc")
    M = diags([offM, diagM, offM], [-1, 0, 1], format="csc")
    try:
        vals = eigsh(K, k=1, M=M, sigma=-1.0, which="LM",
                     return_eigenvectors=False)
        mu = float(vals[0])
    except Exception:
        from scipy.linalg import eigh
        mu = float(eigh(K.toarray(), M.toarray(), eigvals_only=True,
                        subset_by_index=[0, 0])[0])
    return StabilityResult(min_quotient=mu, n_nodes=n, t_min=t_min, dim=dim)


def quadratic_form_value(c_like, xi, dxi, dim: int, t_min: float = -40.0,
                         rtol: float = 1e-9) -> float:
    """Q(xi) for an explicit test function xi(r) with derivative dxi(r)."""
    c_fn, _ = _c_evaluator(c_like, dim)

    def integrand(t):
        r = np.exp(t)
        return (np.asarray(dxi(r)) ** 2
                - c_fn(t) * np.exp(-2.0 * t) * np.asarray(xi(r)) ** 2) \
            * np.exp((dim - 1.0) * t)

    return integral_dr(integrand, t_min, 0.0, rtol=rtol)


# -- built-in verification cases -------------------------------------------------------


@dataclass(frozen=True)
class VerificationCase:
    case_id: str
    dim: int
    lambda_star: float
    cstar: RadialProfile
    psi: PotentialSpec | None = None
    table: NonlinearityTable | None = None
    meta: dict = field(default_factory=dict)


BUILTIN_CASES = ("exp10", "hardy12", "blend10", "torsion")


def build_case(name: str, t_min: float | None = None,
               points_per_unit_t: float | None = None) -> VerificationCase:
    """Assemble a named case: analytic exp10, or reconstructed hardy12 /
    blend10 / torsion."""
    if name == "exp10":
        dim, lam_star = 10, 2.0 * (10 - 2)
        grid = make_log_grid(dim, t_min if t_min is not None else -40.0,
                             points_per_unit_t or 100.0)
        t = grid.nodes
        # u* = -2 log r, f = e^s: c* = lam* r^2 f'(u*) = lam* e^{2t} e^{-2t}
        cvals = lam_star * np.exp(2.0 * t) * np.exp(-2.0 * t)
        cstar = RadialProfile(grid=grid, values=cvals, positive=True)
        s = np.linspace(0.0, 40.0, 4001)
        table = analytic_table(dim, s, s.copy(), s.copy(), s.copy(), label="exp")
        return VerificationCase("exp10", dim, lam_star, cstar, table=table,
                                meta={"f": "exp"})
    if name == "hardy12":
        psi = hardy_potential(12)
        grid = default_grid(psi, t_min=t_min, points_per_unit_t=points_per_unit_t)
        omega = solve_linearized(psi, grid)
        table = reconstruct_nonlinearity(omega, psi)
        cstar = RadialProfile(grid=grid, values=psi.c(grid.nodes), positive=True)
        return VerificationCase("hardy12", 12, 1.0, cstar, psi=psi, table=table)
    if name == "blend10":
        inner, _ = build_oscillatory("borderline", 10, 2)
        psi = blend(8.0, 16.0, inner, 10)
        grid = default_grid(psi, t_min=t_min, points_per_unit_t=points_per_unit_t)
        omega = solve_linearized(psi, grid)
        table = reconstruct_nonlinearity(omega, psi)
        cstar = RadialProfile(grid=grid, values=psi.c(grid.nodes), positive=True)
        return VerificationCase("blend10", 10, 1.0, cstar, psi=psi, table=table,
                                meta={"C1": 8.0, "C2": 16.0})
    if name == "torsion":
        psi = zero_potential(10)
        # shallow by default: u = (1 - r^2)/2 saturates in double precision
        # below t ~ -18 and the sample map degenerates
        grid = default_grid(psi, t_min=t_min if t_min is not None else -12.0,
                            points_per_unit_t=points_per_unit_t)
        omega = solve_linearized(psi, grid)
        table = reconstruct_nonlinearity(omega, psi)
        cstar = RadialProfile(grid=grid, values=psi.c(grid.nodes))
        return VerificationCase("torsion", 10, float("nan"), cstar, psi=psi,
                                table=table)
    raise ValidationError(f"unknown case {name!r}; built-ins: {BUILTIN_CASES}")


def run_verification(case: VerificationCase, window: float = 5.0,
                     depth: float = 0.0, lower_tol: float = 1e-6,
                     stability_depth: float = -60.0) -> VerificationReport:
    """Audit gate, two-sided bound check, and the stability form for a case."""
    if case.table is not None and not case.table.audit.passed:
        raise AuditFailure(
            f"case {case.case_id} rejected before verification: condition audit "
            f"fails ({', '.join(case.table.audit.failing())})")
    report = bound_check(case.cstar, case.lambda_star, case.dim, window=window,
                         depth=depth, lower_tol=lower_tol, case_id=case.case_id)
    target = case.psi if case.psi is not None else case.cstar
    stab = stability_quadratic_form(target, case.dim, t_min=stability_depth)
    checks = dict(report.checks)
    checks["stability_nonnegative"] = {
        "passed": bool(stab.min_quotient >= -1e-8),
        "margin": stab.min_quotient,
    }
    extras = dict(report.extras)
    extras["stability_min_quotient"] = stab.min_quotient
    if case.table is not None and case.psi is not None \
            and case.table.u_profile is not None:
        from .reconstruct import verify_fprime_equals_psi
        err = verify_fprime_equals_psi(case.table, case.psi, case.table.u_profile)
        checks["chain_identity"] = {"passed": bool(err <= 1e-6), "margin": err}
        extras["fprime_vs_psi_rel_err"] = err
        extras["fprime_vs_psi_midpoint_err"] = verify_fprime_equals_psi(
            case.table, case.psi, case.table.u_profile, include_midpoints=True)
    return VerificationReport(
        case_id=report.case_id, dim=report.dim, lambda_star=report.lambda_star,
        lambda1=report.lambda1, window=report.window, depth=report.depth,
        pointwise_max=report.pointwise_max, pointwise_margin=report.pointwise_margin,
        worst_window_sup=report.worst_window_sup, lower_margin=report.lower_margin,
        min_window_inf=report.min_window_inf, checks=checks, trend=report.trend,
        grid=report.grid, extras=extras)
