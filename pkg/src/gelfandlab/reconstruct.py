"""Nonlinearity reconstruction: from a solved profile w build u = int_r^1 w,
then f = (-Delta u) o u^{-1}, audit its structure, and verify f'(u) = Psi.

f' and f'' come from the chain identities f'(u(r)) = Psi(r) and
f''(u(r)) = Psi'(r)/u'(r), not from differencing the f samples; they are
exact by construction up to the solver tolerance.  Tables keep both linear
and log columns: deep constructions overflow the linear scale long before
the log scale becomes awkward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AuditFailure, SolverFailure, ValidationError
from .grid import RadialProfile, integrate_inward
from .potentials import PotentialSpec, _pchip_slopes, potential_to_dict

_MONO_SLACK = 1e-10
_CONVEX_SLACK = 1e-8


@dataclass(frozen=True)
class AuditReport:
    """Condition audit: f(0) > 0, f nondecreasing, f convex, f superlinear."""

    f0_positive: bool
    nondecreasing: bool
    convex: bool
    superlinear: bool
    first_violation: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.f0_positive and self.nondecreasing and self.convex and self.superlinear

    def failing(self) -> list[str]:
        out = []
        if not self.f0_positive:
            out.append("f0_positive")
        if not self.nondecreasing:
            out.append("nondecreasing")
        if not self.convex:
            out.append("convex")
        if not self.superlinear:
            out.append("superlinear")
        return out


@dataclass(frozen=True)
class NonlinearityTable:
    """Sampled nonlinearity on [0, s_max] with derivative columns.

    `s` increases from exactly 0; linear columns overflow to inf on deep
    tables, the log columns are always meaningful (log_fp is -inf where
    f' = 0).  `provenance` records how the table was made; reconstruction
    tables keep live references to the generating objects.
    """

    dim: int
    s: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    log_f: np.ndarray
    log_fp: np.ndarray
    log_fpp: np.ndarray
    provenance: dict
    audit: AuditReport
    psi: PotentialSpec | None = None
    u_profile: RadialProfile | None = None
    omega_profile: RadialProfile | None = None
    extrapolate: bool = False

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    @property
    def f0(self) -> float:
        return float(self.f[0])

    def with_extrapolation(self) -> "NonlinearityTable":
        """Copy that extends beyond s_max by the last segment's exponential fit."""
        prov = dict(self.provenance)
        prov["extrapolation"] = "exponential fit of the last segment"
        return replace(self, extrapolate=True, provenance=prov)

    def _interp_arrays(self):
        d = self.__dict__.setdefault("_cache", {})
        if "slopes" not in d:
            d["slopes"] = _pchip_slopes(self.s, self.log_f)
        return d["slopes"]

    def extrapolation_rate(self) -> float:
        """d(log f)/ds at s_max (the exponential tail rate)."""
        return float(self._interp_arrays()[-1])

    def log_f_eval(self, s) -> np.ndarray:
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s_arr < -1e-12):
            raise ValidationError("nonlinearity evaluated at negative argument")
        over = s_arr > self.s_max * (1 + 1e-12)
        if np.any(over) and not self.extrapolate:
            raise ValidationError(
                f"argument beyond s_max = {self.s_max:g}; enable extrapolation explicitly")
        slopes = self._interp_arrays()
        sq = np.clip(s_arr, 0.0, self.s_max)
        out = _hermite(self.s, self.log_f, slopes, sq)
        if np.any(over):
            k = self.extrapolation_rate()
            out = np.where(over, self.log_f[-1] + k * (s_arr - self.s_max), out)
        return out

    def f_eval(self, s) -> np.ndarray:
        return np.exp(self.log_f_eval(s))

    def log_fp_eval(self, s) -> np.ndarray:
        if np.any(~np.isfinite(self.log_fp)):
            raise ValidationError("f' has zeros; log interpolation undefined")
        d = self.__dict__.setdefault("_cache", {})
        if "fp_slopes" not in d:
            d["fp_slopes"] = _pchip_slopes(self.s, self.log_fp)
        s_arr = np.clip(np.atleast_1d(np.asarray(s, dtype=float)), 0.0, self.s_max)
        return _hermite(self.s, self.log_fp, d["fp_slopes"], s_arr)


def _hermite(x, y, dy, xq):
    i = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, x.size - 2)
    h = x[i + 1] - x[i]
    srel = (xq - x[i]) / h
    h00 = (1 + 2 * srel) * (1 - srel) ** 2
    h10 = srel * (1 - srel) ** 2
    h01 = srel * srel * (3 - 2 * srel)
    h11 = srel * srel * (srel - 1)
    return h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1]


def reconstruct_nonlinearity(omega: RadialProfile, psi: PotentialSpec,
                             ) -> NonlinearityTable:
    """Build the nonlinearity table for the construction u = int_r^1 omega.

    s_j = u(r_j) on the solve grid (r descending from 1), f_j = (-Delta u)(r_j)
    = w'(r_j) + (N-1) w(r_j)/r_j, f'_j = Psi(r_j), f''_j = Psi'(r_j)/u'(r_j).
    """
    grid = omega.grid
    N = grid.dim
    if psi.dim != N:
        raise ValidationError("potential and profile dimensions differ")
    if omega.derivs is None or not omega.positive:
        raise ValidationError("reconstruction needs a solved profile with slopes")
    if np.any(omega.values <= 0.0):
        raise SolverFailure("omega is not strictly positive: u is not injective "
                            "and the construction breaks upstream")

    t = grid.nodes
    u = integrate_inward(omega)
    lw = omega.log_values()
    lslope = omega.derivs / omega.values            # (log w)'
    g = lslope + (N - 1.0)                          # (w' + (N-1) w) / w
    if np.any(g <= 0.0):
        raise SolverFailure("-Delta u is not positive; reconstruction aborted")
    log_f = -t + lw + np.log(g)

    cv = psi.c(t)
    cd = psi.c_deriv(t)
    with np.errstate(divide="ignore"):
        log_fp = np.where(cv > 0.0, np.log(np.maximum(cv, 1e-300)) - 2.0 * t, -np.inf)
    conv = 2.0 * cv - cd                            # -r^3 Psi'(r)
    # log_fpp is the log of |f''|; the sign travels in the linear column
    log_fpp = np.where(conv != 0.0,
                       np.log(np.maximum(np.abs(conv), 1e-300)) - 3.0 * t - lw,
                       -np.inf)
    fpp_sign = np.sign(conv)

    # orient by increasing s (descending r)
    s = u.values[::-1].copy()
    s[0] = 0.0
    log_f = log_f[::-1]
    log_fp = log_fp[::-1]
    log_fpp = log_fpp[::-1]
    fpp_sign = fpp_sign[::-1]
    if np.any(np.diff(s) <= 0.0):
        raise SolverFailure("u is not strictly monotone on the grid")

    with np.errstate(over="ignore"):
        f = np.exp(log_f)
        fp = np.exp(log_fp)
        fpp = fpp_sign * np.exp(log_fpp)
    f0 = float(f[0])
    if f0 <= 0.0:
        raise AuditFailure(f"f(0) = {f0:g} <= 0")

    table = NonlinearityTable(
        dim=N, s=s, f=f, fp=fp, fpp=fpp,
        log_f=log_f, log_fp=log_fp, log_fpp=log_fpp,
        provenance={
            "kind": "reconstruction",
            "potential": potential_to_dict(psi),
            "grid": {"t_min": grid.t_min, "n_nodes": grid.size},
        },
        audit=_audit(s, f, fp, log_f, log_fp, fpp_sign, log_fpp),
        psi=psi, u_profile=u, omega_profile=omega)
    return table


def analytic_table(dim: int, s: np.ndarray, log_f: np.ndarray, log_fp: np.ndarray,
                   log_fpp: np.ndarray, label: str) -> NonlinearityTable:
    """Table from closed-form log data (used for the built-in analytic cases)."""
    with np.errstate(over="ignore"):
        f = np.exp(log_f)
        fp = np.exp(log_fp)
        fpp = np.exp(log_fpp)
    return NonlinearityTable(
        dim=dim, s=s, f=f, fp=fp, fpp=fpp,
        log_f=log_f, log_fp=log_fp, log_fpp=log_fpp,
        provenance={"kind": "analytic", "label": label},
        audit=_audit(s, f, fp, log_f, log_fp, np.ones_like(s), log_fpp))


def _audit(s, f, fp, log_f, log_fp, fpp_sign, log_fpp,
           superlinear_factor: float = 2.0) -> AuditReport:
    f0_pos = bool(f[0] > 0.0)
    mono_viol = np.nonzero(np.diff(log_f) < -_MONO_SLACK)[0]
    nondec = mono_viol.size == 0
    conv_viol = np.nonzero(
        (fpp_sign < 0.0) & (log_fpp > math.log(_CONVEX_SLACK)))[0]
    convex = conv_viol.size == 0

    # superlinearity: f'(s_max) well above f(s_max)/s_max, and f(s)/s growing
    # over the top decade of samples
    s_max = float(s[-1])
    details: dict = {}
    if s_max <= 0 or not np.isfinite(log_fp[-1]):
        superlin = False
    else:
        head = log_fp[-1] - (log_f[-1] - math.log(s_max))
        details["fp_over_f_over_s"] = float(math.exp(min(head, 700.0)))
        top = s >= s_max / 10.0
        top[0] = False
        ratio = log_f[top] - np.log(s[top])
        superlin = bool(head >= math.log(superlinear_factor)
                        and np.all(np.diff(ratio) >= -_MONO_SLACK))

    first = None
    candidates = []
    if mono_viol.size:
        candidates.append(int(mono_viol[0]) + 1)
    if conv_viol.size:
        candidates.append(int(conv_viol[0]))
    if not f0_pos:
        candidates.append(0)
    if candidates:
        first = min(candidates)
    return AuditReport(f0_positive=f0_pos, nondecreasing=nondec, convex=convex,
                       superlinear=superlin, first_violation=first, details=details)


def check_condition_one(table: NonlinearityTable,
                        superlinear_factor: float = 2.0) -> AuditReport:
    """Re-run the structural audit on an existing table."""
    return _audit(table.s, table.f, table.fp, table.log_f, table.log_fp,
                  np.sign(table.fpp), table.log_fpp, superlinear_factor)


def verify_fprime_equals_psi(table: NonlinearityTable, psi: PotentialSpec,
                             u: RadialProfile, include_midpoints: bool = False,
                             ) -> float:
    """Max relative error of f'(u(r)) against Psi(r) over the grid nodes.

    With include_midpoints=True the check also samples between nodes, which
    probes the interpolation rule rather than the chain identity itself (the
    midpoint error scales with the grid resolution across the dips).
    """
    if table.psi is not psi and table.provenance.get("potential") != potential_to_dict(psi):
        raise ValidationError("table was not generated from this potential")
    t = u.grid.nodes
    log_psi = psi.log_psi(t)
    s_nodes = u.values[::-1]
    lfp_nodes = table.log_fp_eval(np.maximum(s_nodes, 0.0))
    err = np.max(np.abs(np.expm1(lfp_nodes - log_psi[::-1])))
    if include_midpoints:
        tm = 0.5 * (t[:-1] + t[1:])
        s_mid = np.asarray(u(tm), dtype=float)[::-1]
        lfp_mid = table.log_fp_eval(np.clip(s_mid, 0.0, table.s_max))
        err = max(err, np.max(np.abs(np.expm1(lfp_mid - psi.log_psi(tm)[::-1]))))
    return float(err)


def deep_value_trend(psi: PotentialSpec, t_mins, points_per_unit_t: float = 4.0):
    """u(t_min) across deepening truncations (finite-stage proxy for the
    divergence of the inward integral)."""
    from .linear import solve_linearized  # local import to avoid a cycle
    from .grid import make_log_grid

    out = []
    for tm in t_mins:
        grid = make_log_grid(psi.dim, tm, points_per_unit_t,
                             [b for b in psi.breakpoints if b > tm])
        w = solve_linearized(psi, grid)
        u = integrate_inward(w)
        out.append(float(u.values[0]))
    return out
