"""Construction of admissible radial potentials Psi(r), handled as c(t) = r^2 Psi(r).

Families: the zero/borderline/Hardy-level constants, the shifted level
2(N-2) - eps, the window potential (borderline level on [A, B], zero
elsewhere), the oscillatory family driven by a stage schedule, affine
blends of an oscillatory potential with an inverse-square background, and
tabulated potentials.

The oscillatory construction works entirely in log coordinates.  Stage n
has edges

    x_{n+1} < y_n < g_n := x_n e^{-1/x_n^3} < x_n,

with c = 2(N-2) exactly on (log g_n, log x_n), a dip value
c(log y_n) = y_n^2 phi(y_n)/(n+1) at y_n, and smooth strictly-decreasing
joins in between.  Joins are built as log-space bumps below the borderline
envelope: writing c = 2(N-2) e^{-q}, the dip-side ramp keeps |dq/dt| < 2,
which is exactly the strict-decrease condition on Psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._segments import (
    _T_LEFT_MIN,
    SegmentBuilder,
    SegmentTable,
    affine_transform,
    constant_table,
)
from .errors import AdmissibilityError, ValidationError
from .grid import RadialProfile

LOG2 = math.log(2.0)


def borderline_level(dim: int) -> float:
    return 2.0 * (dim - 2.0)


def hardy_level(dim: int) -> float:
    return (dim - 2.0) ** 2 / 4.0


# -- target functions phi ----------------------------------------------------


@dataclass(frozen=True)
class PhiTarget:
    """A positive target phi(r) -> infinity as r -> 0, given as log phi(e^t)."""

    label: str
    log_phi: Callable[[float], float]
    monotone: bool = True
    power: float | None = None      # analytic inverse-power targets: phi = amp / r^power
    log_amp: float | None = None

    def __call__(self, t: float) -> float:
        return self.log_phi(t)


def make_phi(spec, dim: int) -> PhiTarget:
    """Parse a phi target: 'inv_r2', 'inv_r', 'borderline', 'power:p[,amp]',
    an existing PhiTarget, or a callable t -> log phi(e^t)."""
    if isinstance(spec, PhiTarget):
        return spec
    if callable(spec):
        return PhiTarget(label="custom", log_phi=spec, monotone=False)
    if not isinstance(spec, str):
        raise ValidationError(f"cannot interpret phi target {spec!r}")
    name = spec.strip().lower()
    if name == "inv_r2":
        return PhiTarget("inv_r2", lambda t: -2.0 * t, power=2.0, log_amp=0.0)
    if name == "inv_r":
        return PhiTarget("inv_r", lambda t: -t, power=1.0, log_amp=0.0)
    if name == "borderline":
        la = math.log(borderline_level(dim))
        return PhiTarget("borderline", lambda t: la - 2.0 * t, power=2.0, log_amp=la)
    if name.startswith("power:"):
        parts = name.split(":", 1)[1].split(",")
        p = float(parts[0])
        amp = float(parts[1]) if len(parts) > 1 else 1.0
        if p <= 0 or amp <= 0:
            raise ValidationError("phi power and amplitude must be positive")
        la = math.log(amp)
        return PhiTarget(f"power:{p:.17g},{amp:.17g}",
                         lambda t, _p=p, _la=la: _la - _p * t, power=p, log_amp=la)
    raise ValidationError(f"unknown phi target {spec!r}")


# -- schedule ------------------------------------------------------------------


@dataclass(frozen=True)
class OscillationStage:
    index: int          # n, starting at 1
    tx: float           # log x_n
    tg: float           # log(x_n e^{-1/x_n^3}) = tx - e^{-3 tx}
    ty: float           # log y_n
    log_c_dip: float    # log c(ty) = 2 ty + log phi(y_n) - log(n+1)
    log_phi_at_y: float


@dataclass(frozen=True)
class OscillationSchedule:
    dim: int
    phi_label: str
    phi_clipped: bool
    stages: tuple[OscillationStage, ...]
    tx_final: float     # log x_{K+1}

    def validate(self) -> None:
        prev_tx = None
        L = borderline_level(self.dim)
        for st in self.stages:
            if not (st.ty < st.tg < st.tx):
                raise ValidationError(f"stage {st.index}: chain ty < tg < tx violated")
            if prev_tx is not None and not (st.tx < prev_tx):
                raise ValidationError(f"stage {st.index}: tx not decreasing")
            # selection rule phi(y_n) > (n+1) * 2(N-2) / g_n^2, in logs
            lhs = st.log_phi_at_y
            rhs = math.log((st.index + 1) * L) - 2.0 * st.tg
            if not lhs > rhs:
                raise ValidationError(f"stage {st.index}: selection inequality fails")
            prev_tx = st.tx
        if self.stages and not self.tx_final < self.stages[-1].ty:
            raise ValidationError("final x edge must sit below the last y")


# -- potential spec -------------------------------------------------------------


@dataclass(frozen=True)
class PotentialSpec:
    """A radial potential in reduced form c(t) = r^2 Psi(r) on (0, 1]."""

    dim: int
    form: str
    params: dict
    segments: SegmentTable
    breakpoints: tuple[float, ...] = ()
    schedule: OscillationSchedule | None = None
    stability_admissible: bool = True
    strictly_decreasing: bool = False
    meta: dict = field(default_factory=dict)

    def c(self, t) -> np.ndarray:
        return self.segments.c_values(t)

    def c_deriv(self, t) -> np.ndarray:
        return self.segments.c_derivs(t)

    def psi(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        t = np.log(r)
        return self.c(t) / (r * r)

    def log_psi(self, t) -> np.ndarray:
        """log Psi(e^t); safe at radii whose square underflows."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        cv = self.c(t)
        if np.any(cv <= 0):
            raise ValidationError("log_psi needs a positive potential")
        return np.log(cv) - 2.0 * t

    def check_admissible(self, t_lo: float, strict_positive: bool = False) -> None:
        """Hardy admissibility 0 <= c <= (N-2)^2/4 on [t_lo, 0], sampled."""
        lo, hi = self.segments.sampled_range(t_lo)
        if lo < -1e-12:
            raise AdmissibilityError(
                f"potential takes negative values (min c = {lo:g}); sign-changing "
                "potentials are unsupported")
        if strict_positive and lo <= 0.0:
            raise AdmissibilityError("potential must be strictly positive")
        ceiling = hardy_level(self.dim) * (1.0 + 1e-12)
        if hi > ceiling:
            raise AdmissibilityError(
                f"potential exceeds the Hardy level: max c = {hi:g} > (N-2)^2/4 = "
                f"{hardy_level(self.dim):g}")


# -- simple families -------------------------------------------------------------


def zero_potential(dim: int) -> PotentialSpec:
    _check_dim(dim)
    return PotentialSpec(dim=dim, form="zero", params={},
                         segments=constant_table(0.0))


def borderline_potential(dim: int) -> PotentialSpec:
    _check_dim(dim)
    if borderline_level(dim) > hardy_level(dim) * (1 + 1e-12):
        raise AdmissibilityError("borderline level 2(N-2) exceeds the Hardy level for N < 10")
    return PotentialSpec(dim=dim, form="borderline", params={},
                         segments=constant_table(borderline_level(dim)),
                         strictly_decreasing=True)


def hardy_potential(dim: int) -> PotentialSpec:
    _check_dim(dim)
    return PotentialSpec(dim=dim, form="hardy", params={},
                         segments=constant_table(hardy_level(dim)),
                         strictly_decreasing=True)


def shifted_potential(eps: float, dim: int) -> PotentialSpec:
    _check_dim(dim)
    level = borderline_level(dim) - eps
    if not 0.0 <= level <= hardy_level(dim) * (1 + 1e-12):
        raise AdmissibilityError("shifted level 2(N-2) - eps outside [0, Hardy]")
    return PotentialSpec(dim=dim, form="shifted", params={"eps": eps},
                         segments=constant_table(level),
                         strictly_decreasing=level > 0.0)


def window_potential(A: float, B: float, dim: int) -> PotentialSpec:
    """Borderline level on [A, B], zero outside; breakpoints at log A, log B."""
    _check_dim(dim)
    if dim < 10:
        raise AdmissibilityError(
            "window potential needs N >= 10 (2(N-2) <= (N-2)^2/4 fails below)")
    if A == 0.0 and B == 1.0:
        return borderline_potential(dim)
    if not (0.0 < A < B <= 1.0):
        raise ValidationError("window needs 0 < A < B <= 1")
    tA, tB = math.log(A), math.log(B)
    L = borderline_level(dim)
    sb = SegmentBuilder()
    sb.add_const(_T_LEFT_MIN, 0.0)
    sb.add_const(tA, L)
    if B < 1.0:
        sb.add_const(tB, 0.0)
        bps: tuple[float, ...] = (tA, tB)
    else:
        bps = (tA,)
    return PotentialSpec(dim=dim, form="window", params={"A": A, "B": B},
                         segments=sb.build(), breakpoints=bps)


def piecewise_constant_potential(edges, levels, dim: int) -> PotentialSpec:
    """c(t) piecewise constant: levels[0] below edges[0], then one level per
    step upward; used by the comparison sweep and property tests."""
    _check_dim(dim)
    edges = [float(e) for e in edges]
    levels = [float(v) for v in levels]
    if len(levels) != len(edges) + 1:
        raise ValidationError("need one more level than edges")
    if any(e2 <= e1 for e1, e2 in zip(edges, edges[1:])):
        raise ValidationError("edges must be strictly increasing")
    ceiling = hardy_level(dim) * (1 + 1e-12)
    if any(not 0.0 <= v <= ceiling for v in levels):
        raise AdmissibilityError("piecewise level outside [0, (N-2)^2/4]")
    sb = SegmentBuilder()
    sb.add_const(_T_LEFT_MIN, levels[0])
    for e, v in zip(edges, levels[1:]):
        sb.add_const(e, v)
    return PotentialSpec(dim=dim, form="piecewise",
                         params={"edges": edges, "levels": levels},
                         segments=sb.build(), breakpoints=tuple(edges))


def table_potential(nodes, c_values, dim: int, *, require_decreasing: bool = False,
                    form: str = "table", params: dict | None = None) -> PotentialSpec:
    """Piecewise-cubic c(t) through the given samples, constant below the range."""
    _check_dim(dim)
    t = np.asarray(nodes, dtype=float)
    cv = np.asarray(c_values, dtype=float)
    if t.ndim != 1 or t.shape != cv.shape or t.size < 2:
        raise ValidationError("table potential needs matching 1-d samples")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("table nodes must be strictly increasing")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(cv))):
        raise ValidationError("table samples must be finite")
    slopes = _pchip_slopes(t, cv)
    sb = SegmentBuilder()
    sb.add_const(_T_LEFT_MIN, float(cv[0]))
    for i in range(t.size - 1):
        h = t[i + 1] - t[i]
        d0, d1 = slopes[i], slopes[i + 1]
        y0, y1 = cv[i], cv[i + 1]
        # cubic Hermite coefficients in z = t - t_i
        c2 = (3 * (y1 - y0) / h - 2 * d0 - d1) / h
        c3 = (2 * (y0 - y1) / h + d0 + d1) / (h * h)
        sb.add_poly(float(t[i]), float(t[i]), [y0, d0, c2, c3])
    seg = sb.build()
    spec = PotentialSpec(dim=dim, form=form,
                         params=params if params is not None else {
                             "nodes": t.tolist(), "c_values": cv.tolist()},
                         segments=seg, breakpoints=(float(t[0]),),
                         strictly_decreasing=bool(require_decreasing))
    if require_decreasing:
        ts = np.linspace(t[0], 0.0, 4097)
        lp = np.log(np.maximum(spec.c(ts), 1e-300)) - 2.0 * ts
        if not np.all(np.diff(lp) < 0):
            raise ValidationError("tabulated Psi is not strictly decreasing in r")
    return spec


def _pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Fritsch-Carlson monotone cubic slopes."""
    h = np.diff(x)
    d = np.diff(y) / h
    n = x.size
    m = np.zeros(n)
    if n == 2:
        m[:] = d[0]
        return m
    w1 = 2 * h[1:] + h[:-1]
    w2 = h[1:] + 2 * h[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        harmonic = (w1 + w2) / (w1 / d[:-1] + w2 / d[1:])
    m[1:-1] = np.where(d[:-1] * d[1:] > 0, harmonic, 0.0)
    m[0] = ((2 * h[0] + h[1]) * d[0] - h[0] * d[1]) / (h[0] + h[1])
    if np.sign(m[0]) != np.sign(d[0]):
        m[0] = 0.0
    elif np.sign(d[0]) != np.sign(d[1]) and abs(m[0]) > 3 * abs(d[0]):
        m[0] = 3 * d[0]
    m[-1] = ((2 * h[-1] + h[-2]) * d[-1] - h[-1] * d[-2]) / (h[-1] + h[-2])
    if np.sign(m[-1]) != np.sign(d[-1]):
        m[-1] = 0.0
    elif np.sign(d[-1]) != np.sign(d[-2]) and abs(m[-1]) > 3 * abs(d[-1]):
        m[-1] = 3 * d[-1]
    return m


def potential_from_profile(c_profile: RadialProfile, dim: int, **kw) -> PotentialSpec:
    return table_potential(c_profile.grid.nodes, c_profile.linear_values(), dim, **kw)


# -- smoothstep helpers -----------------------------------------------------------

_SMOOTHSTEP = {
    1: np.array([0.0, 0.0, 3.0, -2.0]),                       # 3x^2 - 2x^3
    2: np.array([0.0, 0.0, 0.0, 10.0, -15.0, 6.0]),           # C^2
    3: np.array([0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0]),
}

# integral of the one-lower-order smoothstep, used for ramp shoulders
_SHOULDER_INT = {
    1: np.array([0.0, 0.0, 0.5]),                    # int of x
    2: np.array([0.0, 0.0, 0.0, 1.0, -0.5]),         # int of 3x^2-2x^3
    3: np.array([0.0, 0.0, 0.0, 0.0, 2.5, -3.0, 1.0]),
}


def _poly_scale(coefs: np.ndarray, scale: float) -> np.ndarray:
    """Coefficients of p(z/scale) given p(x) coefficients (low-to-high)."""
    out = coefs.astype(float).copy()
    for k in range(out.size):
        out[k] /= scale ** k
    return out


def _poly_compose_affine(coefs: np.ndarray, a: float, b: float) -> np.ndarray:
    """Coefficients of p(a + b u) given p(x), low-to-high, via Horner."""
    res = np.array([coefs[-1]], dtype=float)
    for k in range(coefs.size - 2, -1, -1):
        res = np.convolve(res, np.array([a, b]))
        res[0] += coefs[k]
    return res


# -- oscillatory construction ------------------------------------------------------


def build_oscillatory(phi, dim: int, stages: int, *, y_fraction: float = 0.5,
                      x_fraction: float = 0.5, shoulder_fraction: float = 0.2,
                      smooth_order: int = 2, t_search_floor: float = -1e6,
                      ) -> tuple[PotentialSpec, OscillationSchedule]:
    """Oscillatory potential with `stages` dips below the borderline level.

    phi: target spec (see make_phi).  The dip radius y_n is the midpoint (in
    the chosen fraction) of the largest admissible radius; x_{n+1} halves
    y_n.  Targets above the borderline envelope 2(N-2)/r^2 are clipped to it
    first.  Raises when a stage edge is no longer representable, reporting
    the maximal feasible stage count.
    """
    _check_dim(dim)
    if dim < 10:
        raise AdmissibilityError("oscillatory construction needs N >= 10")
    if stages < 0:
        raise ValidationError("stage count must be >= 0")
    if not (0.0 < y_fraction < 1.0 and 0.0 < x_fraction < 1.0):
        raise ValidationError("fractions must lie in (0, 1)")
    if smooth_order not in _SMOOTHSTEP:
        raise ValidationError("smooth_order must be 1, 2 or 3")
    target = make_phi(phi, dim)
    L = borderline_level(dim)
    logL = math.log(L)

    if stages == 0:
        spec = borderline_potential(dim)
        sched = OscillationSchedule(dim=dim, phi_label=target.label,
                                    phi_clipped=False, stages=(), tx_final=0.0)
        return spec, sched

    def log_phi_eff(t: float) -> float:
        return min(target.log_phi(t), logL - 2.0 * t)

    stage_rows: list[OscillationStage] = []
    clipped = False
    tx = 0.0
    for n in range(1, stages + 1):
        gap_exponent = -3.0 * tx
        if gap_exponent > 708.0:
            raise ValidationError(
                f"stage {n} gap e^(-1/x^3) underflows double precision; "
                f"maximal feasible stage count is {n - 1}")
        tg = tx - math.exp(gap_exponent)
        if not math.isfinite(tg):
            raise ValidationError(
                f"stage {n} edge is not representable; maximal feasible "
                f"stage count is {n - 1}")
        thresh = math.log((n + 1) * L) - 2.0 * tg
        ty_max = _solve_ty_max(target, log_phi_eff, thresh, tg, t_search_floor)
        ty = ty_max + math.log(y_fraction)
        if ty_max >= tg:
            # the target already beats the threshold at g_n; keep enough
            # margin for the clipped envelope to beat it too
            ty = tg - max(-math.log(y_fraction), 0.5 * math.log(n + 1) + LOG2)
        lphi = log_phi_eff(ty)
        if lphi < target.log_phi(ty) - 1e-15:
            clipped = True
        log_c_dip = 2.0 * ty + lphi - math.log(n + 1)
        stage_rows.append(OscillationStage(index=n, tx=tx, tg=tg, ty=ty,
                                           log_c_dip=log_c_dip, log_phi_at_y=lphi))
        tx = ty + math.log(x_fraction)

    sched = OscillationSchedule(dim=dim, phi_label=target.label, phi_clipped=clipped,
                                stages=tuple(stage_rows), tx_final=tx)
    sched.validate()

    sb = SegmentBuilder()
    sb.add_const(_T_LEFT_MIN, L)
    bps = [sched.tx_final]
    Scoef = _SMOOTHSTEP[smooth_order]
    IH = _SHOULDER_INT[smooth_order]
    tx_next = sched.tx_final
    for st in reversed(stage_rows):
        q_y = logL - st.log_c_dip
        if q_y <= 0:
            raise ValidationError(f"stage {st.index}: dip does not sit below the "
                                  "borderline level")
        # recovery ramp [x_{n+1}, y_n]: q rises 0 -> q_y with flat C^k ends
        d_rec = st.ty - tx_next
        sb.add_exppoly(tx_next, tx_next, -q_y * _poly_scale(Scoef, d_rec), scale=L)
        # dip-side ramp [y_n, g_n]: q falls q_y -> 0 with |q'| < 2
        delta = st.tg - st.ty
        slack = 1.0 - q_y / (2.0 * delta)
        if slack <= 1e-12:
            raise ValidationError(f"stage {st.index}: no strictly decreasing join "
                                  "fits the selected dip")
        w = min(shoulder_fraction, 0.5 * slack)
        s_rate = q_y / (delta * (1.0 - w))
        wd = w * delta
        # shoulder A: q = q_y - s*delta*w*IH(z/(w*delta))
        shA = -s_rate * delta * w * _poly_scale(IH, wd)
        shA[0] += q_y
        sb.add_exppoly(st.ty, st.ty, -shA, scale=L)
        # linear core
        core0 = q_y - s_rate * delta * w / 2.0
        sb.add_exppoly(st.ty + wd, st.ty + wd, -np.array([core0, -s_rate]), scale=L)
        # shoulder B: q = s*delta*w*IH(1 - z/(w*delta))
        shB = s_rate * delta * w * _poly_compose_affine(IH, 1.0, -1.0 / wd)
        sb.add_exppoly(st.tg - wd, st.tg - wd, -shB, scale=L)
        # borderline band (g_n, x_n)
        sb.add_const(st.tg, L)
        bps.extend([st.ty, st.ty + wd, st.tg - wd, st.tg, st.tx])
        tx_next = st.tx

    bps = sorted(b for b in set(bps) if b < 0.0)
    spec = PotentialSpec(dim=dim, form="oscillatory",
                         params={"phi": target.label, "stages": stages,
                                 "y_fraction": y_fraction, "x_fraction": x_fraction,
                                 "shoulder_fraction": shoulder_fraction,
                                 "smooth_order": smooth_order},
                         segments=sb.build(), breakpoints=tuple(bps),
                         schedule=sched, strictly_decreasing=True)
    return spec, sched


def _solve_ty_max(target: PhiTarget, log_phi_eff, thresh: float, tg: float,
                  t_floor: float) -> float:
    """Largest t < tg with log phi(t) >= thresh (phi grows as t decreases)."""
    if target.power is not None:
        ty = (target.log_amp - thresh) / target.power
        return min(ty, tg)
    if target.log_phi(tg) > thresh:
        return tg
    if target.monotone:
        lo, hi = tg - 1.0, tg
        while target.log_phi(lo) <= thresh:
            hi = lo
            lo = tg - 2.0 * (tg - lo)
            if lo < t_floor:
                raise ValidationError(
                    "phi never exceeds the selection threshold on the searchable range")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if target.log_phi(mid) > thresh:
                lo = mid
            else:
                hi = mid
        return lo
    t = tg
    while t > t_floor:
        t -= 0.01
        if log_phi_eff(t) > thresh:
            return t
    raise ValidationError(
        "phi never exceeds the selection threshold on the searchable range")


# -- blend -------------------------------------------------------------------------


def blend(C1: float, C2: float, inner: PotentialSpec | None, dim: int) -> PotentialSpec:
    """c_blend(t) = (C2-C1)/(2(N-2)) * c_inner(t) + C1."""
    _check_dim(dim)
    L = borderline_level(dim)
    H = hardy_level(dim)
    if not 0.0 <= C1 <= C2:
        raise ValidationError("need 0 <= C1 <= C2")
    if not (L - 1e-12 <= C2 <= H * (1 + 1e-12)):
        raise AdmissibilityError(
            f"C2 = {C2:g} outside the admissible interval [2(N-2), (N-2)^2/4] = "
            f"[{L:g}, {H:g}]")
    if C1 == C2:
        return PotentialSpec(dim=dim, form="blend",
                             params={"C1": C1, "C2": C2, "inner": None},
                             segments=constant_table(C2),
                             strictly_decreasing=True)
    if inner is None or inner.form != "oscillatory" or inner.schedule is None:
        raise ValidationError("blend needs an oscillatory inner potential")
    if inner.dim != dim:
        raise ValidationError("dimension mismatch between blend and inner potential")
    kappa = (C2 - C1) / L
    seg = affine_transform(inner.segments, kappa, C1)
    return PotentialSpec(dim=dim, form="blend",
                         params={"C1": C1, "C2": C2, "inner": inner.params},
                         segments=seg, breakpoints=inner.breakpoints,
                         schedule=inner.schedule, strictly_decreasing=True,
                         meta={"inner_form": inner.form})


# -- generic monotone join (public plumbing op) --------------------------------------


@dataclass(frozen=True)
class MonotoneSegment:
    t_lo: float
    t_hi: float
    coefs: np.ndarray  # low-to-high in (t - t_lo)

    def __call__(self, t):
        z = np.atleast_1d(np.asarray(t, dtype=float)) - self.t_lo
        acc = np.zeros_like(z) + self.coefs[-1]
        for k in range(self.coefs.size - 2, -1, -1):
            acc = acc * z + self.coefs[k]
        return acc

    def derivative(self, t):
        z = np.atleast_1d(np.asarray(t, dtype=float)) - self.t_lo
        n = self.coefs.size
        acc = np.zeros_like(z) + (n - 1) * self.coefs[-1]
        for k in range(n - 2, 0, -1):
            acc = acc * z + k * self.coefs[k]
        return acc


def interpolate_smooth_decreasing(left, right, *, bounds=None) -> MonotoneSegment:
    """Monotone polynomial segment matching endpoint values and derivatives.

    left/right: (t, value, derivatives...) with derivatives a sequence of
    d/dt values; the match order k is the number supplied per side.  The
    segment must come out (weakly) monotone and inside `bounds` when given,
    otherwise a ValidationError asks the caller to relax the derivative data.
    """
    tl, vl, dl = left[0], left[1], tuple(left[2]) if len(left) > 2 else ()
    tr, vr, dr = right[0], right[1], tuple(right[2]) if len(right) > 2 else ()
    if not tr > tl:
        raise ValidationError("right endpoint must sit at larger t")
    nl, nr = len(dl) + 1, len(dr) + 1
    ncoef = nl + nr
    h = tr - tl
    A = np.zeros((ncoef, ncoef))
    rhs = np.zeros(ncoef)
    for m in range(nl):
        # m-th derivative at z = 0
        A[m, m] = math.factorial(m)
        rhs[m] = vl if m == 0 else dl[m - 1]
    for m in range(nr):
        row = nl + m
        for k in range(m, ncoef):
            A[row, k] = math.factorial(k) / math.factorial(k - m) * h ** (k - m)
        rhs[row] = vr if m == 0 else dr[m - 1]
    coefs = np.linalg.solve(A, rhs)
    seg = MonotoneSegment(t_lo=tl, t_hi=tr, coefs=coefs)

    ts = np.linspace(tl, tr, 2049)
    vals = seg(ts)
    dv = seg.derivative(ts)
    tol = 1e-10 * (abs(vl) + abs(vr) + 1.0)
    if vl == vr and all(abs(d) < 1e-300 for d in dl + dr):
        pass  # constant is fine
    elif vr > vl:
        if np.any(dv < -tol):
            raise ValidationError("no monotone interpolant for the supplied "
                                  "derivative data; relax the matching order")
    elif vr < vl:
        if np.any(dv > tol):
            raise ValidationError("no monotone interpolant for the supplied "
                                  "derivative data; relax the matching order")
    if bounds is not None:
        lo, hi = bounds
        if np.any(vals < lo - tol) or np.any(vals > hi + tol):
            raise ValidationError("interpolant leaves the enclosing bounds")
    return seg


def _check_dim(dim: int) -> None:
    if int(dim) != dim or dim < 3:
        raise ValidationError("dimension must be an integer >= 3")


# -- serialization ----------------------------------------------------------------


def potential_to_dict(spec: PotentialSpec) -> dict:
    if spec.form == "oscillatory" and spec.params.get("phi") == "custom":
        raise ValidationError("custom phi targets are not serializable")
    out = {
        "form": spec.form,
        "dim": spec.dim,
        "params": spec.params,
    }
    if spec.schedule is not None:
        out["schedule"] = {
            "phi": spec.schedule.phi_label,
            "phi_clipped": spec.schedule.phi_clipped,
            "tx_final": spec.schedule.tx_final,
            "stages": [
                {"n": st.index, "tx": st.tx, "tg": st.tg, "ty": st.ty,
                 "log_c_dip": st.log_c_dip, "log_phi_at_y": st.log_phi_at_y}
                for st in spec.schedule.stages
            ],
        }
    return out


def potential_from_dict(data: dict) -> PotentialSpec:
    form = data["form"]
    dim = int(data["dim"])
    p = data.get("params", {})
    if form == "zero":
        return zero_potential(dim)
    if form == "borderline":
        return borderline_potential(dim)
    if form == "hardy":
        return hardy_potential(dim)
    if form == "shifted":
        return shifted_potential(float(p["eps"]), dim)
    if form == "window":
        return window_potential(float(p["A"]), float(p["B"]), dim)
    if form == "oscillatory":
        spec, _ = build_oscillatory(p["phi"], dim, int(p["stages"]),
                                    y_fraction=float(p.get("y_fraction", 0.5)),
                                    x_fraction=float(p.get("x_fraction", 0.5)),
                                    shoulder_fraction=float(p.get("shoulder_fraction", 0.2)),
                                    smooth_order=int(p.get("smooth_order", 2)))
        return spec
    if form == "blend":
        if p.get("inner") is None:
            return blend(float(p["C1"]), float(p["C2"]), None, dim)
        inner_params = p["inner"]
        inner, _ = build_oscillatory(inner_params["phi"], dim, int(inner_params["stages"]),
                                     y_fraction=float(inner_params.get("y_fraction", 0.5)),
                                     x_fraction=float(inner_params.get("x_fraction", 0.5)),
                                     shoulder_fraction=float(
                                         inner_params.get("shoulder_fraction", 0.2)),
                                     smooth_order=int(inner_params.get("smooth_order", 2)))
        return blend(float(p["C1"]), float(p["C2"]), inner, dim)
    if form == "table":
        return table_potential(np.asarray(p["nodes"], dtype=float),
                               np.asarray(p["c_values"], dtype=float), dim,
                               require_decreasing=bool(p.get("require_decreasing", False)))
    raise ValidationError(f"unknown potential form {form!r}")
