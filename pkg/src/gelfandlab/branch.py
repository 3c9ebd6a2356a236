"""Nonlinear Gelfand branch by shooting in the interior value.

The scaling trick: v solves -Delta v = f(v) with v(0) = m, v'(0) = 0; if R
is the first zero of v then u(x) = v(R x) solves -Delta u = lambda f(u) on
the unit ball with u = 0 on the boundary and lambda = R^2.  Sweeping m
traces the branch lambda(m); its supremum estimates the extremal parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import radial_shoot
from .errors import AuditFailure, SolverFailure, ValidationError
from .grid import fd_weights
from .potentials import _pchip_slopes
from .reconstruct import NonlinearityTable

_EMPTY = np.empty(0)


@dataclass(frozen=True)
class AnalyticNonlinearity:
    """Closed-form nonlinearity for the kernel: 'exp' (e^s) or 'const'."""

    label: str
    value: float = 1.0

    def f_eval(self, s):
        s = np.asarray(s, dtype=float)
        if self.label == "exp":
            return np.exp(s)
        return np.full_like(s, self.value)

    @property
    def f0(self) -> float:
        return 1.0 if self.label == "exp" else self.value


def exp_nonlinearity() -> AnalyticNonlinearity:
    return AnalyticNonlinearity(label="exp")


def constant_nonlinearity(value: float) -> AnalyticNonlinearity:
    if value <= 0:
        raise ValidationError("constant nonlinearity must be positive")
    return AnalyticNonlinearity(label="const", value=value)


def _kernel_f(f):
    """(fcode, fa, ts, tf, td, ex_on, ex_k, ex_logf) for the shooting kernel."""
    if isinstance(f, AnalyticNonlinearity):
        if f.label == "exp":
            return 1, 0.0, _EMPTY, _EMPTY, _EMPTY, 0, 0.0, 0.0
        return 0, float(f.value), _EMPTY, _EMPTY, _EMPTY, 0, 0.0, 0.0
    if isinstance(f, NonlinearityTable):
        slopes = f._interp_arrays()
        return (3, 0.0, np.ascontiguousarray(f.s), np.ascontiguousarray(f.log_f),
                np.ascontiguousarray(slopes), 1 if f.extrapolate else 0,
                float(slopes[-1]), float(f.log_f[-1]))
    raise ValidationError(f"cannot shoot with nonlinearity {f!r}")


def _f_at(f, s: float) -> float:
    return float(np.atleast_1d(f.f_eval(s))[0])


@dataclass(frozen=True)
class ShootResult:
    m: float
    R: float
    lam: float
    v_end: float
    nsteps: int
    record_r: np.ndarray | None = None
    v: np.ndarray | None = None
    dv: np.ndarray | None = None


@dataclass(frozen=True)
class BranchDiagram:
    m: np.ndarray
    R: np.ndarray
    lam: np.ndarray
    lambda_star_estimate: float
    monotone_flag: bool
    no_finite_lambda_star: bool = False
    meta: dict = field(default_factory=dict)


def shoot_ivp(f, m: float, dim: int, *, rtol: float = 1e-10,
              r_cap: float | None = None, record_r=None) -> ShootResult:
    """First zero of the interior value problem; lambda = R^2.

    Starts at r0 with the second-order expansion v = m - f(m) r^2/(2N),
    shrinking r0 below 1e-6 whenever the expansion term would exceed the
    integrator tolerance.
    """
    if m <= 0:
        raise ValidationError("interior value m must be positive")
    if dim < 1:
        raise ValidationError("dimension must be >= 1")
    fm = _f_at(f, m)
    if not np.isfinite(fm) or fm <= 0:
        raise ValidationError(f"f(m) = {fm:g} is not a positive finite value")
    f0 = _f_at(f, 0.0)
    N = float(dim)
    r0 = min(1e-6, math.sqrt(2.0 * N * m * 1e-10 / fm))
    v0 = m - fm * r0 * r0 / (2.0 * N)
    dv0 = -fm * r0 / N
    if r_cap is None:
        r_cap = 1.5 * math.sqrt(2.0 * N * m / f0) + 1.0
    rec = np.ascontiguousarray(record_r, dtype=float) if record_r is not None else _EMPTY
    fcode, fa, ts, tf, td, ex_on, ex_k, ex_logf = _kernel_f(f)
    R, v_end, dv_end, v_rec, dv_rec, nsteps, status = radial_shoot(
        fcode, fa, ts, tf, td, ex_on, ex_k, ex_logf, N,
        r0, v0, dv0, r_cap, 1, 1e-10 * m, rtol,
        1e-14 * max(m, 1.0), 1e-14 * max(m, 1.0), rec)
    if status == 3:
        raise ValidationError(
            "nonlinearity evaluated beyond its table without extrapolation enabled")
    if status == 2:
        raise SolverFailure("shooting produced a non-finite state")
    if status == 1:
        raise SolverFailure(
            f"no zero found before the radius cap r = {r_cap:g}; "
            "the nonlinearity is not positive enough")
    return ShootResult(m=m, R=float(R), lam=float(R * R), v_end=float(v_end),
                       nsteps=int(nsteps),
                       record_r=rec if rec.size else None,
                       v=v_rec if rec.size else None,
                       dv=dv_rec if rec.size else None)


def _audit_gate(f, waive_superlinearity: bool) -> bool:
    """True when lambda* must be flagged as possibly unbounded."""
    if isinstance(f, AnalyticNonlinearity):
        if f.label == "exp":
            return False
        if not waive_superlinearity:
            raise AuditFailure("constant nonlinearity fails the superlinearity audit; "
                               "pass waive_superlinearity=True to sweep anyway")
        return True
    audit = f.audit
    if audit.passed:
        return False
    failing = audit.failing()
    if failing == ["superlinear"] and waive_superlinearity:
        return True
    raise AuditFailure(f"nonlinearity audit failed: {', '.join(failing)}")


def minimal_branch(f, dim: int, m_grid, *, rtol: float = 1e-10,
                   waive_superlinearity: bool = False, refine: bool = True,
                   refine_rel_tol: float = 1e-4) -> BranchDiagram:
    """Branch diagram over the m grid with a refined lambda* estimate.

    The estimate is the sweep maximum, golden-section refined around an
    interior argmax until the relative improvement drops below
    refine_rel_tol.  Monotone lambda(m) leaves the estimate at the last
    sweep point.
    """
    unbounded = _audit_gate(f, waive_superlinearity)
    m_arr = np.asarray(m_grid, dtype=float)
    if m_arr.ndim != 1 or m_arr.size < 2 or np.any(np.diff(m_arr) <= 0) or m_arr[0] <= 0:
        raise ValidationError("m grid must be positive and strictly increasing")
    lam = np.empty_like(m_arr)
    R = np.empty_like(m_arr)
    for i, m in enumerate(m_arr):
        res = shoot_ivp(f, float(m), dim, rtol=rtol)
        lam[i] = res.lam
        R[i] = res.R
    k = int(np.argmax(lam))
    est = float(lam[k])
    refined_evals = 0
    if refine and 0 < k < m_arr.size - 1:
        a, b = float(m_arr[k - 1]), float(m_arr[k + 1])
        est, refined_evals = _golden_max(
            lambda m: shoot_ivp(f, m, dim, rtol=rtol).lam, a, b, est, refine_rel_tol)
    mono = bool(np.all(np.diff(lam) >= -1e-8 * max(est, 1e-300)))
    return BranchDiagram(m=m_arr, R=R, lam=lam, lambda_star_estimate=est,
                         monotone_flag=mono, no_finite_lambda_star=unbounded,
                         meta={"refined_evals": refined_evals, "rtol": rtol,
                               "argmax_interior": bool(0 < k < m_arr.size - 1)})


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(fn, a: float, b: float, best: float, rel_tol: float):
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    evals = 2
    for _ in range(120):
        prev = best
        best = max(best, fc, fd)
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
        evals += 1
        if best > 0 and (best - prev) / best < rel_tol and evals > 6:
            break
    return max(best, fc, fd), evals


def extremal_profile(table: NonlinearityTable, dim: int, *, cross_check: bool = False,
                     rtol: float = 1e-10):
    """The construction's own u as the extremal profile (lambda* = 1).

    With cross_check=True a branch sweep over the table's range must return
    lambda* = 1 within 1 percent.
    """
    if table.provenance.get("kind") != "reconstruction" or table.u_profile is None:
        raise ValidationError("table provenance does not carry the generating profile")
    if table.dim != dim:
        raise ValidationError("dimension mismatch")
    prof = table.u_profile
    prof.meta["lambda_star"] = 1.0
    if cross_check:
        top = min(0.8 * table.s_max, 40.0)
        if top <= 1.0:
            raise ValidationError("table too short for a cross-check sweep")
        diag = minimal_branch(table, dim, np.linspace(0.5, top, 25), rtol=rtol)
        prof.meta["cross_check_lambda"] = diag.lambda_star_estimate
        if abs(diag.lambda_star_estimate - 1.0) > 0.01:
            raise SolverFailure(
                f"cross-check failed: branch lambda* = {diag.lambda_star_estimate:g} "
                "is not 1 within 1%")
    return prof


def profile_at_lambda(f, dim: int, lam_target: float, *, m_hi: float,
                      record_r=None, rtol: float = 1e-10) -> ShootResult:
    """Minimal-branch profile at a given lambda: the smallest m with
    lambda(m) = lam_target, found by bisection on the increasing branch."""
    lo, hi = 1e-6, m_hi
    if shoot_ivp(f, hi, dim, rtol=rtol).lam < lam_target:
        raise ValidationError("lambda target above the sampled branch")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if shoot_ivp(f, mid, dim, rtol=rtol).lam < lam_target:
            lo = mid
        else:
            hi = mid
    return shoot_ivp(f, hi, dim, rtol=rtol, record_r=record_r)


def scaling_residual(res: ShootResult, f, dim: int) -> float:
    """Max-norm residual of -Delta u = lambda f(u) for u(x) = v(R x).

    Uses the recorded (v, v') samples; v'' is finite-differenced from v',
    so this is an independent consistency check on the shot profile.
    """
    if res.record_r is None:
        raise ValidationError("shoot result carries no recorded profile")
    r = res.record_r
    good = np.isfinite(res.v)
    r, v, dv = r[good], res.v[good], res.dv[good]
    if r.size < 7:
        raise ValidationError("too few recorded nodes for a residual check")
    n = r.size
    d2 = np.empty(n)
    for i in range(n):
        lo = min(max(0, i - 2), n - 5)
        d2[i] = fd_weights(r[lo:lo + 5], r[i], 1) @ dv[lo:lo + 5]
    resid = d2 + (dim - 1.0) / r * dv + np.asarray(f.f_eval(np.maximum(v, 0.0)))
    # scale back to the unit ball: u(x) = v(R x), the residual picks up R^2
    return float(res.lam * np.max(np.abs(resid)))


def branch_to_arrays(diag: BranchDiagram):
    return np.column_stack([diag.m, diag.R, diag.lam])
