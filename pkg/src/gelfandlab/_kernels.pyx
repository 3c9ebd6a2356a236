# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stepping kernels (hot inner loops).

Mirrors `_kernels_py`: adaptive Dormand-Prince 5(4) for the linearized
radial ODE in t = log r with magnitude renormalization, and the nonlinear
radial shooting integrator.  The Python fallback is the reference; both
must agree to integrator tolerance.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isfinite, log, pow

cnp.import_array()

BACKEND_NAME = "compiled"

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0

cdef int CODE_CONST = 0
cdef int CODE_POLY = 1
cdef int CODE_EXPPOLY = 2


cdef inline double seg_c(int code, double a, double b, double tref,
                         double[:] coef, int deg, double t) nogil:
    cdef double z = t - tref
    cdef double acc
    cdef int k
    if code == CODE_CONST:
        return a
    acc = coef[deg]
    for k in range(deg - 1, -1, -1):
        acc = acc * z + coef[k]
    if code == CODE_POLY:
        return acc
    return a * exp(acc) + b


def linear_ode_solve(double[:] nodes, int[:] interval_seg, int[:] seg_code,
                     double[:] seg_a, double[:] seg_b, double[:] seg_tref,
                     double[:, :] seg_coef, int[:] seg_deg, double dim,
                     double w0, double dw0, double rtol,
                     double rescale_hi, double rescale_lo):
    cdef Py_ssize_t n = nodes.shape[0]
    w_arr = np.empty(n)
    dw_arr = np.empty(n)
    ls_arr = np.empty(n)
    cdef double[:] w_out = w_arr
    cdef double[:] dw_out = dw_arr
    cdef double[:] ls_out = ls_arr
    cdef double nm2 = dim - 2.0
    cdef double nm1 = dim - 1.0

    cdef double w = w0, dw = dw0, logscale = 0.0
    cdef long nsteps = 0, nreject = 0
    cdef int status = 0
    cdef double h = 0.01
    cdef Py_ssize_t i
    cdef int si, code, deg
    cdef double a, b, tref
    cdef double t, t_end, c0, c, c_end
    cdef double k1w, k1d, k2w, k2d, k3w, k3d, k4w, k4d, k5w, k5d, k6w, k6d, k7w, k7d
    cdef double yw, yd, w5, d5, ew, ed, scale, err, mag, fac, hmin

    w_out[0] = w
    dw_out[0] = dw
    ls_out[0] = logscale

    for i in range(n - 1):
        t = nodes[i]
        t_end = nodes[i + 1]
        si = interval_seg[i]
        code = seg_code[si]
        a = seg_a[si]
        b = seg_b[si]
        tref = seg_tref[si]
        deg = seg_deg[si]

        c0 = seg_c(code, a, b, tref, seg_coef[si], deg, t)
        k1w = dw
        k1d = -nm2 * dw - (c0 - nm1) * w

        while t < t_end:
            if h > t_end - t:
                h = t_end - t
            hmin = 1e-14 * (fabs(t) if fabs(t) > 1.0 else 1.0)
            if h < hmin:
                h = hmin
                if t + h > t_end:
                    h = t_end - t

            yw = w + h * A21 * k1w
            yd = dw + h * A21 * k1d
            c = seg_c(code, a, b, tref, seg_coef[si], deg, t + h / 5.0)
            k2w = yd
            k2d = -nm2 * yd - (c - nm1) * yw

            yw = w + h * (A31 * k1w + A32 * k2w)
            yd = dw + h * (A31 * k1d + A32 * k2d)
            c = seg_c(code, a, b, tref, seg_coef[si], deg, t + 3.0 * h / 10.0)
            k3w = yd
            k3d = -nm2 * yd - (c - nm1) * yw

            yw = w + h * (A41 * k1w + A42 * k2w + A43 * k3w)
            yd = dw + h * (A41 * k1d + A42 * k2d + A43 * k3d)
            c = seg_c(code, a, b, tref, seg_coef[si], deg, t + 4.0 * h / 5.0)
            k4w = yd
            k4d = -nm2 * yd - (c - nm1) * yw

            yw = w + h * (A51 * k1w + A52 * k2w + A53 * k3w + A54 * k4w)
            yd = dw + h * (A51 * k1d + A52 * k2d + A53 * k3d + A54 * k4d)
            c = seg_c(code, a, b, tref, seg_coef[si], deg, t + 8.0 * h / 9.0)
            k5w = yd
            k5d = -nm2 * yd - (c - nm1) * yw

            yw = w + h * (A61 * k1w + A62 * k2w + A63 * k3w + A64 * k4w + A65 * k5w)
            yd = dw + h * (A61 * k1d + A62 * k2d + A63 * k3d + A64 * k4d + A65 * k5d)
            c_end = seg_c(code, a, b, tref, seg_coef[si], deg, t + h)
            k6w = yd
            k6d = -nm2 * yd - (c_end - nm1) * yw

            w5 = w + h * (B1 * k1w + B3 * k3w + B4 * k4w + B5 * k5w + B6 * k6w)
            d5 = dw + h * (B1 * k1d + B3 * k3d + B4 * k4d + B5 * k5d + B6 * k6d)
            k7w = d5
            k7d = -nm2 * d5 - (c_end - nm1) * w5

            ew = h * (E1 * k1w + E3 * k3w + E4 * k4w + E5 * k5w + E6 * k6w + E7 * k7w)
            ed = h * (E1 * k1d + E3 * k3d + E4 * k4d + E5 * k5d + E6 * k6d + E7 * k7d)

            scale = fabs(w)
            if fabs(dw) > scale:
                scale = fabs(dw)
            if fabs(w5) > scale:
                scale = fabs(w5)
            if fabs(d5) > scale:
                scale = fabs(d5)
            scale = rtol * scale + 1e-300
            err = fabs(ew)
            if fabs(ed) > err:
                err = fabs(ed)
            err /= scale
            if not isfinite(err):
                err = 1e300
            nsteps += 1

            if err <= 1.0 or h <= 1e-13 * (fabs(t) if fabs(t) > 1.0 else 1.0):
                t += h
                w = w5
                dw = d5
                k1w = k7w
                k1d = k7d
                if not (isfinite(w) and isfinite(dw)):
                    return w_arr, dw_arr, ls_arr, nsteps, nreject, 2
                mag = fabs(w)
                if fabs(dw) > mag:
                    mag = fabs(dw)
                if mag == 0.0:
                    return w_arr, dw_arr, ls_arr, nsteps, nreject, 1
                if mag > rescale_hi or mag < rescale_lo:
                    w /= mag
                    dw /= mag
                    logscale += log(mag)
                    k1w /= mag
                    k1d /= mag
            else:
                nreject += 1
            if err > 0:
                fac = 0.9 * pow(err, -0.2)
            else:
                fac = 5.0
            if fac > 5.0:
                fac = 5.0
            if fac < 0.2:
                fac = 0.2
            h *= fac

        w_out[i + 1] = w
        dw_out[i + 1] = dw
        ls_out[i + 1] = logscale

    return w_arr, dw_arr, ls_arr, nsteps, nreject, status


# -- nonlinear radial shooting ------------------------------------------------

cdef int F_CONST = 0
cdef int F_EXP = 1
cdef int F_LINEAR = 2
cdef int F_TABLE = 3


cdef inline double f_eval(int fcode, double fa, double[:] ts, double[:] tf,
                          double[:] td, Py_ssize_t n_tab, int ex_on,
                          double ex_k, double ex_logf, double v) nogil:
    # exponents saturate at 700 so overshooting trial stages reject cleanly
    cdef Py_ssize_t lo, hi, mid
    cdef double h, s, h00, h10, h01, h11, val
    if fcode == F_CONST:
        return fa
    if fcode == F_EXP:
        return exp(v if v < 700.0 else 700.0)
    if fcode == F_LINEAR:
        return fa * v
    if v <= ts[0]:
        return exp(tf[0])
    if v >= ts[n_tab - 1]:
        if ex_on:
            val = ex_logf + ex_k * (v - ts[n_tab - 1])
            return exp(val if val < 700.0 else 700.0)
        if v <= ts[n_tab - 1] * (1.0 + 1e-12) + 1e-300:
            return exp(tf[n_tab - 1])
        return -1.0
    lo = 0
    hi = n_tab - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
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
    return exp(val if val < 700.0 else 700.0)


cdef int dp_step(int fcode, double fa, double[:] ts, double[:] tf, double[:] td,
                 Py_ssize_t n_tab, int ex_on, double ex_k, double ex_logf,
                 double nm1, double r, double v, double p,
                 double k1v, double k1p, double h, double* out) nogil:
    """One DP step; fills out[0..5] = v5, p5, k7v, k7p, ev, ep.  Returns 0 ok, 3 table."""
    cdef double k2v, k2p, k3v, k3p, k4v, k4p, k5v, k5p, k6v, k6p, k7v, k7p
    cdef double yv, yp, F, rr, v5, p5

    rr = r + h / 5.0
    yv = v + h * A21 * k1v
    yp = p + h * A21 * k1p
    F = f_eval(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k, ex_logf, yv)
    if fcode == F_TABLE and F < 0.0:
        return 3
    k2v = yp
    k2p = -nm1 / rr * yp - F

    rr = r + 3.0 * h / 10.0
    yv = v + h * (A31 * k1v + A32 * k2v)
    yp = p + h * (A31 * k1p + A32 * k2p)
    F = f_eval(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k, ex_logf, yv)
    if fcode == F_TABLE and F < 0.0:
        return 3
    k3v = yp
    k3p = -nm1 / rr * yp - F

    rr = r + 4.0 * h / 5.0
    yv = v + h * (A41 * k1v + A42 * k2v + A43 * k3v)
    yp = p + h * (A41 * k1p + A42 * k2p + A43 * k3p)
    F = f_eval(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k, ex_logf, yv)
    if fcode == F_TABLE and F < 0.0:
        return 3
    k4v = yp
    k4p = -nm1 / rr * yp - F

    rr = r + 8.0 * h / 9.0
    yv = v + h * (A51 * k1v + A52 * k2v + A53 * k3v + A54 * k4v)
    yp = p + h * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p)
    F = f_eval(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k, ex_logf, yv)
    if fcode == F_TABLE and F < 0.0:
        return 3
    k5v = yp
    k5p = -nm1 / rr * yp - F

    rr = r + h
    yv = v + h * (A61 * k1v + A62 * k2v + A63 * k3v + A64 * k4v + A65 * k5v)
    yp = p + h * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p)
    F = f_eval(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k, ex_logf, yv)
    if fcode == F_TABLE and F < 0.0:
        return 3
    k6v = yp
    k6p = -nm1 / rr * yp - F

    v5 = v + h * (B1 * k1v + B3 * k3v + B4 * k4v + B5 * k5v + B6 * k6v)
    p5 = p + h * (B1 * k1p + B3 * k3p + B4 * k4p + B5 * k5p + B6 * k6p)
    F = f_eval(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k, ex_logf, v5)
    if fcode == F_TABLE and F < 0.0:
        return 3
    k7v = p5
    k7p = -nm1 / rr * p5 - F

    out[0] = v5
    out[1] = p5
    out[2] = k7v
    out[3] = k7p
    out[4] = h * (E1 * k1v + E3 * k3v + E4 * k4v + E5 * k5v + E6 * k6v + E7 * k7v)
    out[5] = h * (E1 * k1p + E3 * k3p + E4 * k4p + E5 * k5p + E6 * k6p + E7 * k7p)
    return 0


def radial_shoot(int fcode, double fa, double[:] ts, double[:] tf, double[:] td,
                 int ex_on, double ex_k, double ex_logf, double dim,
                 double r0, double v0, double dv0, double r_stop,
                 int stop_at_zero, double zero_tol, double rtol,
                 double atol_v, double atol_p, double[:] record_r):
    cdef double nm1 = dim - 1.0
    cdef Py_ssize_t n_tab = ts.shape[0]
    cdef Py_ssize_t nrec = record_r.shape[0]
    v_rec_arr = np.full(nrec, np.nan)
    dv_rec_arr = np.full(nrec, np.nan)
    cdef double[:] v_rec = v_rec_arr
    cdef double[:] dv_rec = dv_rec_arr
    cdef Py_ssize_t irec = 0

    cdef double r = r0, v = v0, p = dv0
    cdef long nsteps = 0
    cdef double h = 0.002 * r0 if r0 > 0 else 1e-9
    cdef double k1v, k1p, F
    cdef double target, scv, scp, err, fac, hmin
    cdef double out[6]
    cdef double h_lo, h_hi, h_mid, v_land, p_land
    cdef int rc, k

    while irec < nrec and record_r[irec] <= r:
        v_rec[irec] = v
        dv_rec[irec] = p
        irec += 1

    F = f_eval(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k, ex_logf, v)
    if fcode == F_TABLE and F < 0.0:
        return r, v, p, v_rec_arr, dv_rec_arr, nsteps, 3
    k1v = p
    k1p = -nm1 / r * p - F

    while r < r_stop:
        target = r_stop
        if irec < nrec and record_r[irec] < target:
            target = record_r[irec]
        if h > target - r:
            h = target - r
        hmin = 1e-15 * (r if r > 1.0 else 1.0)
        if h < hmin:
            h = hmin

        rc = dp_step(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k, ex_logf,
                     nm1, r, v, p, k1v, k1p, h, out)
        if rc != 0:
            return r, v, p, v_rec_arr, dv_rec_arr, nsteps, rc
        nsteps += 1
        scv = atol_v + rtol * (fabs(v) if fabs(v) > fabs(out[0]) else fabs(out[0]))
        scp = atol_p + rtol * (fabs(p) if fabs(p) > fabs(out[1]) else fabs(out[1]))
        err = fabs(out[4]) / scv
        if fabs(out[5]) / scp > err:
            err = fabs(out[5]) / scp
        if not isfinite(err):
            err = 1e300

        if err <= 1.0 or h <= 4e-15 * (r if r > 1.0 else 1.0):
            if not (isfinite(out[0]) and isfinite(out[1])):
                return r, v, p, v_rec_arr, dv_rec_arr, nsteps, 2
            if stop_at_zero and out[0] <= 0.0:
                h_lo = 0.0
                h_hi = h
                h_mid = h
                v_land = out[0]
                p_land = out[1]
                for k in range(200):
                    h_mid = 0.5 * (h_lo + h_hi)
                    rc = dp_step(fcode, fa, ts, tf, td, n_tab, ex_on, ex_k,
                                 ex_logf, nm1, r, v, p, k1v, k1p, h_mid, out)
                    if rc != 0:
                        return r, v, p, v_rec_arr, dv_rec_arr, nsteps, rc
                    v_land = out[0]
                    p_land = out[1]
                    nsteps += 1
                    if fabs(v_land) <= zero_tol:
                        break
                    if v_land > 0.0:
                        h_lo = h_mid
                    else:
                        h_hi = h_mid
                return r + h_mid, v_land, p_land, v_rec_arr, dv_rec_arr, nsteps, 0
            r += h
            v = out[0]
            p = out[1]
            k1v = out[2]
            k1p = out[3]
            while irec < nrec and record_r[irec] <= r * (1 + 1e-15):
                v_rec[irec] = v
                dv_rec[irec] = p
                irec += 1
        if err > 0:
            fac = 0.9 * pow(err, -0.2)
        else:
            fac = 5.0
        if fac > 5.0:
            fac = 5.0
        if fac < 0.2:
            fac = 0.2
        h *= fac

    return r, v, p, v_rec_arr, dv_rec_arr, nsteps, 1 if stop_at_zero else 0
