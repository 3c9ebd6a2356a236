"""Log-radius grids and radial calculus.

All solvers in this package work in the Emden coordinate t = log r, where
the radial operator for a profile W(t) = w(e^t) reads

    Delta w = e^{-2t} (W'' + (N-2) W'),

and every inverse-square potential becomes a bounded coefficient.  Profiles
whose magnitude overflows double precision across long t-stretches carry a
per-node logarithmic offset: the stored mantissa times exp(offset) is the
actual value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ValidationError, SolverFailure

# resolution floor: at least 2 nodes per decade of r, i.e. spacing <= ln(10)/2
_MAX_SPACING = math.log(10.0) / 2.0

# values whose |log| exceeds this are stored as mantissa * exp(offset)
_OFFSET_CUT = 300.0


@dataclass(frozen=True)
class LogRadialGrid:
    """Strictly increasing log-radius nodes ending exactly at t = 0 (r = 1)."""

    dim: int
    nodes: np.ndarray
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        n = self.nodes
        if n.ndim != 1 or n.size < 2:
            raise ValidationError("grid needs at least 2 nodes")
        if not np.all(np.isfinite(n)):
            raise ValidationError("grid nodes must be finite")
        if np.any(np.diff(n) <= 0):
            raise ValidationError("grid nodes must be strictly increasing")
        if n[-1] != 0.0:
            raise ValidationError("last grid node must be exactly t = 0")
        if self.dim < 3:
            raise ValidationError("dimension must be >= 3")
        for b in self.breakpoints:
            if not np.any(n == b):
                raise ValidationError(f"breakpoint t={b!r} is not a grid node")

    @property
    def t_min(self) -> float:
        return float(self.nodes[0])

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def r(self) -> np.ndarray:
        return np.exp(self.nodes)

    def segment_slices(self) -> list[slice]:
        """Node index ranges between consecutive breakpoints (inclusive ends)."""
        cuts = [self.t_min, *sorted(self.breakpoints), 0.0]
        cuts = sorted(set(c for c in cuts if self.t_min <= c <= 0.0))
        out = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            i = int(np.searchsorted(self.nodes, a))
            j = int(np.searchsorted(self.nodes, b))
            out.append(slice(i, j + 1))
        return out


def make_log_grid(dim: int, t_min: float, points_per_unit_t: float,
                  breakpoints=()) -> LogRadialGrid:
    """Uniform-density grid on [t_min, 0] with breakpoints inserted exactly.

    Each stretch between consecutive breakpoints is subdivided uniformly at
    density `points_per_unit_t`, never coarser than 2 nodes per decade.
    """
    if not np.isfinite(t_min) or not np.isfinite(points_per_unit_t):
        raise ValidationError("non-finite grid parameters")
    if t_min >= 0.0:
        raise ValidationError("t_min must be negative (r < 1)")
    if points_per_unit_t <= 0:
        raise ValidationError("points_per_unit_t must be positive")
    bps = sorted(set(float(b) for b in breakpoints))
    for b in bps:
        if not np.isfinite(b):
            raise ValidationError("non-finite breakpoint")
        if b < t_min or b > 0.0:
            raise ValidationError(f"breakpoint t={b} outside [t_min, 0]")
    spacing = min(1.0 / points_per_unit_t, _MAX_SPACING)
    cuts = sorted(set([t_min, *bps, 0.0]))
    pieces = []
    total = sum(int(math.ceil((b - a) / spacing - 1e-12)) for a, b in zip(cuts[:-1], cuts[1:]))
    if total > 60_000_000:
        raise ValidationError("grid would exceed the node budget; lower the density")
    for a, b in zip(cuts[:-1], cuts[1:]):
        nsub = max(1, int(math.ceil((b - a) / spacing - 1e-12)))
        seg = np.linspace(a, b, nsub + 1)
        pieces.append(seg[:-1] if b != cuts[-1] else seg)
    nodes = np.concatenate(pieces)
    nodes[-1] = 0.0
    return LogRadialGrid(dim=dim, nodes=nodes, breakpoints=tuple(bps))


@dataclass(frozen=True)
class RadialProfile:
    """A radial function sampled on a grid, interpolated piecewise-cubically in t.

    `values` are mantissas; if `log_offsets` is present the actual value at
    node i is values[i] * exp(log_offsets[i]).  `derivs` holds d/dt at the
    nodes on the same mantissa scale.  Positive profiles with offsets are
    interpolated in log space, everything else linearly.
    """

    grid: LogRadialGrid
    values: np.ndarray
    log_offsets: np.ndarray | None = None
    derivs: np.ndarray | None = None
    positive: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != self.grid.nodes.shape:
            raise ValidationError("profile values must match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("profile mantissas must be finite")
        if self.log_offsets is not None and not np.all(np.isfinite(self.log_offsets)):
            raise ValidationError("log offsets must be finite")

    # -- value access -----------------------------------------------------

    def linear_values(self) -> np.ndarray:
        """Values as plain floats; overflows to inf for very deep profiles."""
        if self.log_offsets is None:
            return self.values.copy()
        with np.errstate(over="ignore"):
            return self.values * np.exp(self.log_offsets)

    def log_values(self) -> np.ndarray:
        """log of the profile; requires a positive profile."""
        if np.any(self.values <= 0):
            raise ValidationError("log_values requires positive mantissas")
        out = np.log(self.values)
        if self.log_offsets is not None:
            out = out + self.log_offsets
        return out

    def node_slopes(self) -> np.ndarray:
        """d/dt at nodes (mantissa scale), finite-differenced when not stored."""
        if self.derivs is not None:
            return self.derivs
        return _fd_slopes(self.grid, self.values)

    # -- interpolation ----------------------------------------------------

    def __call__(self, t):
        """Interpolated value(s) at log-radius t (clipped to the grid range)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.log_offsets is not None and self.positive:
            y = self.log_values()
            dy = self.node_slopes() / self.values
            with np.errstate(over="ignore"):
                return np.exp(_hermite_eval(self.grid.nodes, y, dy, t))
        y = self.values
        dy = self.node_slopes()
        return _hermite_eval(self.grid.nodes, y, dy, t)

    def derivative(self, t):
        """d/dt of the interpolant at t."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.log_offsets is not None and self.positive:
            y = self.log_values()
            dy = self.node_slopes() / self.values
            val = np.exp(_hermite_eval(self.grid.nodes, y, dy, t))
            return val * _hermite_eval_deriv(self.grid.nodes, y, dy, t)
        return _hermite_eval_deriv(self.grid.nodes, self.values, self.node_slopes(), t)


def profile_from_callable(grid: LogRadialGrid, fn: Callable[[np.ndarray], np.ndarray],
                          positive: bool = False) -> RadialProfile:
    vals = np.asarray(fn(grid.nodes), dtype=float)
    return RadialProfile(grid=grid, values=vals, positive=positive)


def canonical_profile(grid: LogRadialGrid, log_values: np.ndarray,
                      log_slope: np.ndarray | None = None,
                      meta: dict | None = None) -> RadialProfile:
    """Canonical positive profile from exact log-values.

    Nodes with |log value| beyond the float-safe cut keep mantissa exp(log - K)
    with offset K; shallow profiles come out with no offsets at all.
    """
    need = np.abs(log_values) > _OFFSET_CUT
    if not np.any(need):
        vals = np.exp(log_values)
        derivs = None if log_slope is None else log_slope * vals
        return RadialProfile(grid, vals, None, derivs, positive=True, meta=meta or {})
    offs = np.where(need, log_values, 0.0)
    vals = np.exp(log_values - offs)
    derivs = None if log_slope is None else log_slope * vals
    return RadialProfile(grid, vals, offs, derivs, positive=True, meta=meta or {})


# -- cubic Hermite interpolation helpers ----------------------------------

def _locate(x: np.ndarray, xq: np.ndarray) -> np.ndarray:
    i = np.searchsorted(x, xq, side="right") - 1
    return np.clip(i, 0, x.size - 2)


def _hermite_eval(x, y, dy, xq):
    i = _locate(x, xq)
    h = x[i + 1] - x[i]
    s = (xq - x[i]) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1]


def _hermite_eval_deriv(x, y, dy, xq):
    i = _locate(x, xq)
    h = x[i + 1] - x[i]
    s = (xq - x[i]) / h
    d00 = (6 * s * s - 6 * s) / h
    d10 = 3 * s * s - 4 * s + 1
    d01 = (6 * s - 6 * s * s) / h
    d11 = 3 * s * s - 2 * s
    return d00 * y[i] + d10 * dy[i] + d01 * y[i + 1] + d11 * dy[i + 1]


# -- finite differences (Fornberg weights on uneven nodes) -----------------

def fd_weights(x: np.ndarray, x0: float, m: int) -> np.ndarray:
    """Fornberg weights for the m-th derivative at x0 on nodes x."""
    n = x.size
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _block_derivatives(t: np.ndarray, y: np.ndarray, width: int = 7):
    """First and second t-derivatives of samples y on nodes t (7-point stencils)."""
    n = t.size
    if n < 3:
        raise ValidationError("grid too coarse for second differences")
    w = min(width, n)
    d1 = np.empty(n)
    d2 = np.empty(n)
    for i in range(n):
        lo = min(max(0, i - w // 2), n - w)
        sl = slice(lo, lo + w)
        d1[i] = fd_weights(t[sl], t[i], 1) @ y[sl]
        d2[i] = fd_weights(t[sl], t[i], 2) @ y[sl]
    return d1, d2


def _fd_slopes(grid: LogRadialGrid, y: np.ndarray) -> np.ndarray:
    out = np.empty_like(y)
    for sl in grid.segment_slices():
        t = grid.nodes[sl]
        ys = y[sl]
        if t.size == 1:
            out[sl] = 0.0
            continue
        if t.size == 2:
            out[sl] = (ys[1] - ys[0]) / (t[1] - t[0])
            continue
        w = min(3, t.size)
        seg = np.empty(t.size)
        for i in range(t.size):
            lo = min(max(0, i - w // 2), t.size - w)
            seg[i] = fd_weights(t[lo:lo + w], t[i], 1) @ ys[lo:lo + w]
        out[sl] = seg
    return out


# -- radial Laplacian -------------------------------------------------------

def radial_laplacian(u: RadialProfile) -> RadialProfile:
    """Samples of -Delta u on the same grid, computed in t-coordinates.

    At breakpoints the two one-sided values are averaged and the jump is
    recorded in meta['breakpoint_jumps'].
    """
    grid = u.grid
    N = grid.dim
    t = grid.nodes
    use_log = u.log_offsets is not None and u.positive
    vals = np.zeros_like(u.values)
    offs = np.zeros_like(u.values)
    counts = np.zeros_like(u.values)
    jumps: dict[float, float] = {}
    edge_vals: dict[int, list[float]] = {}

    for sl in grid.segment_slices():
        ts = t[sl]
        if use_log:
            lv = u.log_values()[sl]
            if u.derivs is not None:
                l1 = (u.derivs / u.values)[sl]
                l2 = _block_derivatives(ts, l1)[0]
            else:
                l1, l2 = _block_derivatives(ts, lv)
            # -Delta u = -e^{-2t} U (l2 + l1^2 + (N-2) l1)
            core = -(l2 + l1 * l1 + (N - 2.0) * l1)
            logmag = lv - 2.0 * ts + np.log(np.maximum(np.abs(core), 1e-300))
            seg_off = np.where(np.abs(logmag) > _OFFSET_CUT, logmag, 0.0)
            piece = np.sign(core) * np.exp(logmag - seg_off)
        else:
            ys = u.values[sl]
            if u.derivs is not None:
                u1 = u.derivs[sl]
                u2 = _block_derivatives(ts, u1)[0]
            else:
                u1, u2 = _block_derivatives(ts, ys)
            piece = -np.exp(-2.0 * ts) * (u2 + (N - 2.0) * u1)
            seg_off = np.zeros_like(piece)

        idx = np.arange(sl.start, sl.stop)
        first_hit = counts[idx] > 0
        for k_local, k in enumerate(idx):
            if first_hit[k_local]:
                prev = vals[k] * math.exp(offs[k])
                cur = piece[k_local] * math.exp(seg_off[k_local])
                jumps[float(t[k])] = cur - prev
                vals[k] = 0.5 * (prev + cur)
                offs[k] = 0.0
            else:
                vals[k] = piece[k_local]
                offs[k] = seg_off[k_local]
            counts[k] += 1

    have_offs = np.any(offs != 0.0)
    return RadialProfile(
        grid=grid,
        values=vals,
        log_offsets=offs if have_offs else None,
        positive=False,
        meta={"breakpoint_jumps": jumps, "op": "radial_laplacian"},
    )


# -- inward integration -----------------------------------------------------

def integrate_inward(w: RadialProfile) -> RadialProfile:
    """u(r) = integral of w from r to 1, i.e. u(t) = int_t^0 W(s) e^s ds.

    The integrand's cubic Hermite interpolant is integrated exactly per
    interval, so du/dr = -w holds at the nodes by construction.
    """
    grid = w.grid
    t = grid.nodes
    if w.log_offsets is None:
        g = w.values * np.exp(t)
        gs = (w.node_slopes() + w.values) * np.exp(t)
    else:
        lg = w.log_values() + t
        if np.any(lg > 700.0):
            raise SolverFailure("inward integral overflows double precision")
        g = np.exp(lg)
        gs = (w.node_slopes() / w.values + 1.0) * g
    h = np.diff(t)
    # exact integral of the cubic Hermite on each interval
    seg = h / 2.0 * (g[:-1] + g[1:]) + h * h / 12.0 * (gs[:-1] - gs[1:])
    u = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    return RadialProfile(grid=grid, values=u, derivs=-g,
                         meta={"op": "integrate_inward"})


# -- quadrature ---------------------------------------------------------------

def integral_dr(fn_of_t: Callable[[np.ndarray], np.ndarray], t_lo: float, t_hi: float,
                rtol: float = 1e-8, max_doublings: int = 22) -> float:
    """integral of f(r) dr over [e^{t_lo}, e^{t_hi}] as trapezoid in t with weight e^t.

    The mesh is doubled until two successive estimates agree to rtol.
    """
    if not (np.isfinite(t_lo) and np.isfinite(t_hi)) or t_lo >= t_hi:
        raise ValidationError("bad quadrature interval")

    def estimate(n):
        ts = np.linspace(t_lo, t_hi, n + 1)
        vals = np.asarray(fn_of_t(ts), dtype=float) * np.exp(ts)
        h = (t_hi - t_lo) / n
        return h * (vals.sum() - 0.5 * (vals[0] + vals[-1]))

    n = 256
    prev = estimate(n)
    for _ in range(max_doublings):
        n *= 2
        cur = estimate(n)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise SolverFailure("quadrature did not reach the requested tolerance")
