"""Pure-Python stepping kernels (fallback backend).

Same algorithms as the compiled extension `_kernels`: an adaptive
Dormand-Prince 5(4) integrator for the linearized radial ODE in t = log r
with magnitude renormalization, and a radial shooting integrator for the
nonlinear problem.  Selected at import time by `_backend` when the compiled
module is unavailable or GELFANDLAB_BACKEND=python is set.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

_CODE_CONST = 0
_CODE_POLY = 1
_CODE_EXPPOLY = 2


def _seg_c(code, a, b, tref, coef, deg, t):
    z = t - tref
    if code == _CODE_CONST:
        return a
    acc = coef[deg]
    for k in range(deg - 1, -1, -1):
        acc = acc * z + coef[k]
    if code == _CODE_POLY:
        return acc
    return a * math.exp(acc) + b


def linear_ode_solve(nodes, interval_seg, seg_code, seg_a, seg_b, seg_tref, seg_coef,
                     seg_deg, dim, w0, dw0, rtol, rescale_hi, rescale_lo):
    """Integrate W'' + (N-2) W' + (c(t) - (N-1)) W = 0 outward over the nodes.

    Returns (w, dw, logscale, nsteps, nreject, status); mantissas (w, dw) at
    each node with the accumulated log rescaling in logscale.  status: 0 ok,
    1 vanished state, 2 non-finite state.
    """
    n = nodes.shape[0]
    w_out = np.empty(n)
    dw_out = np.empty(n)
    ls_out = np.empty(n)
    nm2 = dim - 2.0
    nm1 = dim - 1.0

    w, dw = float(w0), float(dw0)
    logscale = 0.0
    w_out[0], dw_out[0], ls_out[0] = w, dw, logscale
    nsteps = 0
    nreject = 0
    h = 0.01

    for i in range(n - 1):
        t = nodes[i]
        t_end = nodes[i + 1]
        si = interval_seg[i]
        code = int(seg_code[si])
        a = seg_a[si]
        b = seg_b[si]
        tref = seg_tref[si]
        coef = seg_coef[si]
        deg = int(seg_deg[si])

        # FSAL cache for this interval
        c0 = _seg_c(code, a, b, tref, coef, deg, t)
        k1w = dw
        k1d = -nm2 * dw - (c0 - nm1) * w

        while t < t_end:
            if h > t_end - t:
                h = t_end - t
            if h < 1e-14 * max(abs(t), 1.0):
                h = 1e-14 * max(abs(t), 1.0)
                if t + h > t_end:
                    h = t_end - t

            # stages
            yw = w + h * _A21 * k1w
            yd = dw + h * _A21 * k1d
            c = _seg_c(code, a, b, tref, coef, deg, t + h / 5.0)
            k2w = yd
            k2d = -nm2 * yd - (c - nm1) * yw

            yw = w + h * (_A31 * k1w + _A32 * k2w)
            yd = dw + h * (_A31 * k1d + _A32 * k2d)
            c = _seg_c(code, a, b, tref, coef, deg, t + 3.0 * h / 10.0)
            k3w = yd
            k3d = -nm2 * yd - (c - nm1) * yw

            yw = w + h * (_A41 * k1w + _A42 * k2w + _A43 * k3w)
            yd = dw + h * (_A41 * k1d + _A42 * k2d + _A43 * k3d)
            c = _seg_c(code, a, b, tref, coef, deg, t + 4.0 * h / 5.0)
            k4w = yd
            k4d = -nm2 * yd - (c - nm1) * yw

            yw = w + h * (_A51 * k1w + _A52 * k2w + _A53 * k3w + _A54 * k4w)
            yd = dw + h * (_A51 * k1d + _A52 * k2d + _A53 * k3d + _A54 * k4d)
            c = _seg_c(code, a, b, tref, coef, deg, t + 8.0 * h / 9.0)
            k5w = yd
            k5d = -nm2 * yd - (c - nm1) * yw

            yw = w + h * (_A61 * k1w + _A62 * k2w + _A63 * k3w + _A64 * k4w + _A65 * k5w)
            yd = dw + h * (_A61 * k1d + _A62 * k2d + _A63 * k3d + _A64 * k4d + _A65 * k5d)
            c_end = _seg_c(code, a, b, tref, coef, deg, t + h)
            k6w = yd
            k6d = -nm2 * yd - (c_end - nm1) * yw

            w5 = w + h * (_B1 * k1w + _B3 * k3w + _B4 * k4w + _B5 * k5w + _B6 * k6w)
            d5 = dw + h * (_B1 * k1d + _B3 * k3d + _B4 * k4d + _B5 * k5d + _B6 * k6d)
            k7w = d5
            k7d = -nm2 * d5 - (c_end - nm1) * w5

            ew = h * (_E1 * k1w + _E3 * k3w + _E4 * k4w + _E5 * k5w + _E6 * k6w + _E7 * k7w)
            ed = h * (_E1 * k1d + _E3 * k3d + _E4 * k4d + _E5 * k5d + _E6 * k6d + _E7 * k7d)

            scale = rtol * max(abs(w), abs(dw), abs(w5), abs(d5)) + 1e-300
            err = max(abs(ew), abs(ed)) / scale
            if not math.isfinite(err):
                err = 1e300
            nsteps += 1
            if err <= 1.0 or h <= 1e-13 * max(abs(t), 1.0):
                t += h
                w, dw = w5, d5
                k1w, k1d = k7w, k7d
                if not (math.isfinite(w) and math.isfinite(dw)):
                    return w_out, dw_out, ls_out, nsteps, nreject, 2
                mag = max(abs(w), abs(dw))
                if mag > rescale_hi or (0.0 < mag < rescale_lo):
                    if mag == 0.0:
                        return w_out, dw_out, ls_out, nsteps, nreject, 1
                    w /= mag
                    dw /= mag
                    logscale += math.log(mag)
                    k1w /= mag
                    k1d /= mag
                elif mag == 0.0:
                    return w_out, dw_out, ls_out, nsteps, nreject, 1
            else:
                nreject += 1
            fac = 0.9 * err ** -0.2 if err > 0 else 5.0
            h *= min(5.0, max(0.2, fac))

        w_out[i + 1], dw_out[i + 1], ls_out[i + 1] = w, dw, logscale

    return w_out, dw_out, ls_out, nsteps, nreject, 0


# -- nonlinear radial shooting ------------------------------------------------

_F_CONST = 0
_F_EXP = 1
_F_LINEAR = 2
_F_TABLE = 3


def _f_eval(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k, ex_logf, v):
    # exponents saturate at 700: a huge-but-finite value just makes the
    # stepper reject the trial step instead of poisoning it with inf/nan
    if fcode == _F_CONST:
        return fa
    if fcode == _F_EXP:
        return math.exp(min(v, 700.0))
    if fcode == _F_LINEAR:
        return fa * v
    # table: monotone cubic Hermite of log f over s; clamp below the domain
    if v <= ts[0]:
        return math.exp(tf[0])
    if v >= ts[n_tab - 1]:
        if ex_on:
            return math.exp(min(ex_logf + ex_k * (v - ts[n_tab - 1]), 700.0))
        if v <= ts[n_tab - 1] * (1.0 + 1e-12) + 1e-300:
            return math.exp(tf[n_tab - 1])
        return -1.0  # sentinel: out of table
    lo, hi = 0, n_tab - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ts[mid] <= v:
            lo = mid
        else:
            hi = mid
    h = ts[lo + 1] - ts[lo]
    s = (v - ts[lo]) / h
    h00 = (1 + 2 * s) * (1 - s) * (1 - s)
    h10 = s * (1 - s) * (1 - s)
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    val = h00 * tf[lo] + h10 * h * td[lo] + h01 * tf[lo + 1] + h11 * h * td[lo + 1]
    return math.exp(min(val, 700.0))


def radial_shoot(fcode, fa, ts, tf, td, ex_on, ex_k, ex_logf,
                 dim, r0, v0, dv0, r_stop, stop_at_zero, zero_tol, rtol,
                 atol_v, atol_p, record_r):
    """Integrate v'' + (N-1)/r v' + F(v) = 0 outward from r0.

    stop_at_zero: detect the first zero of v and polish it to |v| <= zero_tol.
    Otherwise integrate to r_stop exactly.  record_r: ascending radii at
    which (v, v') are recorded (NaN beyond the stopping point).

    Returns (r_final, v_final, dv_final, v_rec, dv_rec, nsteps, status);
    status: 0 ok (zero found / endpoint reached), 1 no zero before r_stop,
    2 non-finite state, 3 nonlinearity evaluated outside its table.
    """
    nm1 = dim - 1.0
    n_tab = ts.shape[0]
    nrec = record_r.shape[0]
    v_rec = np.full(nrec, np.nan)
    dv_rec = np.full(nrec, np.nan)
    irec = 0

    r, v, p = float(r0), float(v0), float(dv0)
    nsteps = 0
    h = 0.002 * r0 if r0 > 0 else 1e-9

    def rhs(rr, vv, pp):
        F = _f_eval(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k, ex_logf, vv)
        if fcode == _F_TABLE and F < 0.0:
            return None
        return pp, -nm1 / rr * pp - F

    while irec < nrec and record_r[irec] <= r:
        v_rec[irec], dv_rec[irec] = v, p
        irec += 1

    out = rhs(r, v, p)
    if out is None:
        return r, v, p, v_rec, dv_rec, nsteps, 3
    k1v, k1p = out

    while r < r_stop:
        target = r_stop
        if irec < nrec and record_r[irec] < target:
            target = record_r[irec]
        if h > target - r:
            h = target - r
        if h < 1e-15 * max(r, 1.0):
            h = 1e-15 * max(r, 1.0)

        step = _dp_step(rhs, r, v, p, k1v, k1p, h)
        if step is None:
            return r, v, p, v_rec, dv_rec, nsteps, 3
        v5, p5, k7v, k7p, ew, ep = step
        nsteps += 1
        scv = atol_v + rtol * max(abs(v), abs(v5))
        scp = atol_p + rtol * max(abs(p), abs(p5))
        err = max(abs(ew) / scv, abs(ep) / scp)
        if not math.isfinite(err):
            err = 1e300

        if err <= 1.0 or h <= 4e-15 * max(r, 1.0):
            if not (math.isfinite(v5) and math.isfinite(p5)):
                return r, v, p, v_rec, dv_rec, nsteps, 2
            if stop_at_zero and v5 <= 0.0:
                # bisect the step size until v lands on the axis
                h_lo, h_hi = 0.0, h
                h_mid, v_land, p_land = h, v5, p5
                for _ in range(200):
                    h_mid = 0.5 * (h_lo + h_hi)
                    trial = _dp_step(rhs, r, v, p, k1v, k1p, h_mid)
                    if trial is None:
                        return r, v, p, v_rec, dv_rec, nsteps, 3
                    v_land, p_land = trial[0], trial[1]
                    nsteps += 1
                    if abs(v_land) <= zero_tol:
                        break
                    if v_land > 0.0:
                        h_lo = h_mid
                    else:
                        h_hi = h_mid
                return r + h_mid, v_land, p_land, v_rec, dv_rec, nsteps, 0
            r += h
            v, p = v5, p5
            k1v, k1p = k7v, k7p
            while irec < nrec and record_r[irec] <= r * (1 + 1e-15):
                v_rec[irec], dv_rec[irec] = v, p
                irec += 1
        fac = 0.9 * err ** -0.2 if err > 0 else 5.0
        h *= min(5.0, max(0.2, fac))

    status = 1 if stop_at_zero else 0
    return r, v, p, v_rec, dv_rec, nsteps, status


def _dp_step(rhs, r, v, p, k1v, k1p, h):
    out = rhs(r + h / 5.0, v + h * _A21 * k1v, p + h * _A21 * k1p)
    if out is None:
        return None
    k2v, k2p = out
    out = rhs(r + 3 * h / 10.0, v + h * (_A31 * k1v + _A32 * k2v),
              p + h * (_A31 * k1p + _A32 * k2p))
    if out is None:
        return None
    k3v, k3p = out
    out = rhs(r + 4 * h / 5.0, v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v),
              p + h * (_A41 * k1p + _A42 * k2p + _A43 * k3p))
    if out is None:
        return None
    k4v, k4p = out
    out = rhs(r + 8 * h / 9.0,
              v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v),
              p + h * (_A51 * k1p + _A52 * k2p + _A53 * k3p + _A54 * k4p))
    if out is None:
        return None
    k5v, k5p = out
    out = rhs(r + h,
              v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v),
              p + h * (_A61 * k1p + _A62 * k2p + _A63 * k3p + _A64 * k4p + _A65 * k5p))
    if out is None:
        return None
    k6v, k6p = out
    v5 = v + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B5 * k5v + _B6 * k6v)
    p5 = p + h * (_B1 * k1p + _B3 * k3p + _B4 * k4p + _B5 * k5p + _B6 * k6p)
    out = rhs(r + h, v5, p5)
    if out is None:
        return None
    k7v, k7p = out
    ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v + _E7 * k7v)
    ep = h * (_E1 * k1p + _E3 * k3p + _E4 * k4p + _E5 * k5p + _E6 * k6p + _E7 * k7p)
    return v5, p5, k7v, k7p, ev, ep
