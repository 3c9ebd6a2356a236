"""Piecewise numeric representation of the reduced potential c(t) = r^2 Psi(r).

Every potential is compiled into a flat table of segments so that both the
vectorized numpy evaluation here and the stepping kernels can evaluate c(t)
without touching Python objects.  Segment codes:

    CONST    c(t) = a                       (exact constants, e.g. 2(N-2))
    POLY     c(t) = P(t - tref)             (tabulated potentials)
    EXPPOLY  c(t) = a * exp(P(t - tref)) + b  (log-space ramps, blends)

Segment i covers [t_left[i], t_left[i+1}); the first segment extends to
-inf, the last one up to t = 0.  Evaluation at a boundary is one-sided by
this convention (the right segment wins).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CODE_CONST = 0
CODE_POLY = 1
CODE_EXPPOLY = 2

MAX_COEF = 8  # polynomial degree <= 7

_T_LEFT_MIN = -1e308


def _polyval(coef: np.ndarray, deg: int, z):
    acc = np.zeros_like(z) + coef[deg]
    for k in range(deg - 1, -1, -1):
        acc = acc * z + coef[k]
    return acc


def _polyder_val(coef: np.ndarray, deg: int, z):
    if deg == 0:
        return np.zeros_like(z)
    acc = np.zeros_like(z) + deg * coef[deg]
    for k in range(deg - 1, 0, -1):
        acc = acc * z + k * coef[k]
    return acc


@dataclass(frozen=True)
class SegmentTable:
    """Flat arrays describing c(t) piecewise on (-inf, 0]."""

    t_left: np.ndarray  # (nseg,) ascending, t_left[0] == -1e308
    code: np.ndarray    # (nseg,) int32
    a: np.ndarray       # (nseg,)
    b: np.ndarray       # (nseg,)
    tref: np.ndarray    # (nseg,)
    coef: np.ndarray    # (nseg, MAX_COEF)
    deg: np.ndarray     # (nseg,) int32

    def __post_init__(self):
        if self.t_left.ndim != 1 or self.coef.shape != (self.t_left.size, MAX_COEF):
            raise ValueError("malformed segment table")
        if np.any(np.diff(self.t_left) <= 0):
            raise ValueError("segment edges must be strictly increasing")

    @property
    def nseg(self) -> int:
        return int(self.t_left.size)

    def locate(self, t) -> np.ndarray:
        idx = np.searchsorted(self.t_left, np.asarray(t, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.nseg - 1)

    def c_values(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        idx = self.locate(t)
        for i in np.unique(idx):
            sel = idx == i
            z = t[sel] - self.tref[i]
            if self.code[i] == CODE_CONST:
                out[sel] = self.a[i]
            elif self.code[i] == CODE_POLY:
                out[sel] = _polyval(self.coef[i], int(self.deg[i]), z)
            else:
                out[sel] = self.a[i] * np.exp(_polyval(self.coef[i], int(self.deg[i]), z)) + self.b[i]
        return out

    def c_derivs(self, t) -> np.ndarray:
        """dc/dt, one-sided at segment boundaries."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        idx = self.locate(t)
        for i in np.unique(idx):
            sel = idx == i
            z = t[sel] - self.tref[i]
            if self.code[i] == CODE_CONST:
                out[sel] = 0.0
            elif self.code[i] == CODE_POLY:
                out[sel] = _polyder_val(self.coef[i], int(self.deg[i]), z)
            else:
                p = _polyval(self.coef[i], int(self.deg[i]), z)
                dp = _polyder_val(self.coef[i], int(self.deg[i]), z)
                out[sel] = self.a[i] * np.exp(p) * dp
        return out

    def sampled_range(self, t_lo: float, per_segment: int = 65) -> tuple[float, float]:
        """(min, max) of c over [t_lo, 0], sampled densely inside each segment."""
        lo, hi = np.inf, -np.inf
        edges = np.append(self.t_left, 0.0)
        for i in range(self.nseg):
            a_edge = max(edges[i], t_lo)
            b_edge = min(edges[i + 1], 0.0)
            if a_edge > b_edge:
                continue
            if self.code[i] == CODE_CONST:
                vals = np.array([self.a[i]])
            else:
                ts = np.linspace(a_edge, b_edge, per_segment)
                vals = self.c_values(ts)
            lo = min(lo, float(vals.min()))
            hi = max(hi, float(vals.max()))
        return lo, hi


class SegmentBuilder:
    """Accumulates segments in ascending t order, then freezes them."""

    def __init__(self):
        self._rows: list[tuple[float, int, float, float, float, np.ndarray, int]] = []

    def add_const(self, t_left: float, value: float) -> None:
        coef = np.zeros(MAX_COEF)
        self._rows.append((t_left, CODE_CONST, value, 0.0, 0.0, coef, 0))

    def add_poly(self, t_left: float, tref: float, coefs) -> None:
        coefs = np.asarray(coefs, dtype=float)
        if coefs.size > MAX_COEF:
            raise ValueError("polynomial degree too high for segment table")
        coef = np.zeros(MAX_COEF)
        coef[: coefs.size] = coefs
        self._rows.append((t_left, CODE_POLY, 0.0, 0.0, tref, coef, coefs.size - 1))

    def add_exppoly(self, t_left: float, tref: float, coefs, scale: float = 1.0,
                    shift: float = 0.0) -> None:
        coefs = np.asarray(coefs, dtype=float)
        if coefs.size > MAX_COEF:
            raise ValueError("polynomial degree too high for segment table")
        coef = np.zeros(MAX_COEF)
        coef[: coefs.size] = coefs
        self._rows.append((t_left, CODE_EXPPOLY, scale, shift, tref, coef, coefs.size - 1))

    def build(self) -> SegmentTable:
        if not self._rows:
            raise ValueError("no segments")
        rows = sorted(self._rows, key=lambda r: r[0])
        return SegmentTable(
            t_left=np.array([r[0] for r in rows]),
            code=np.array([r[1] for r in rows], dtype=np.int32),
            a=np.array([r[2] for r in rows]),
            b=np.array([r[3] for r in rows]),
            tref=np.array([r[4] for r in rows]),
            coef=np.vstack([r[5] for r in rows]),
            deg=np.array([r[6] for r in rows], dtype=np.int32),
        )


def constant_table(value: float) -> SegmentTable:
    b = SegmentBuilder()
    b.add_const(_T_LEFT_MIN, value)
    return b.build()


def affine_transform(table: SegmentTable, scale: float, shift: float) -> SegmentTable:
    """Segment table for scale * c(t) + shift."""
    code = table.code.copy()
    a = table.a.copy()
    bb = table.b.copy()
    coef = table.coef.copy()
    for i in range(table.nseg):
        if code[i] == CODE_CONST:
            a[i] = scale * a[i] + shift
        elif code[i] == CODE_POLY:
            coef[i] = scale * coef[i]
            coef[i, 0] += shift
        else:
            a[i] = scale * a[i]
            bb[i] = scale * bb[i] + shift
    return SegmentTable(table.t_left.copy(), code, a, bb, table.tref.copy(), coef, table.deg.copy())
