"""
numerics.py

Shared numerical kernels used by every RiderQuad solver: Gauss-Hermite quadrature, natural cubic splines,
the uniform-grid bi-cubic spline used for jump conditions, scalar root finding and tridiagonal solves.

Features:
- Gauss-Hermite rules of order 1..64, symmetrised so nodes are exactly antisymmetric about zero.
- Natural cubic splines (scipy) with linear extrapolation beyond the end knots, vectorised over many value columns.
- Splines that may restart at one knot per column, and their exact integrals against a normal density (partial
  normal moments per piece, summed over all knots at once by FFT correlation on uniform knots).
- Uniform-grid cubic rows whose second derivatives come from three-point central differences. A bi-cubic
  evaluation is four of these row interpolations followed by one more along the second axis.
- Bracketed root search (Brent: bisection safeguarded secant/inverse quadratic steps).
- Tridiagonal solves with one or many right-hand sides.

Classes:
- Quadrature: order, nodes and weights of a Gauss-Hermite rule.
- CubicSpline1D: natural cubic spline through (knots, values), values may carry extra trailing columns.
- BrokenCubicSpline: per-column natural splines, continuous but not smooth at an optional break knot.
- UniformCubicRows: a stack of rows sampled on one uniform grid, interpolated row by row.
- BicubicSpline2D: bi-cubic interpolation over a uniform (x, y) grid.

Functions:
- gauss_hermite(q), spline_build(knots, values), spline_eval(spline, x), bicubic_eval(surface, x, y),
  normal_partial_moments(lo, hi, mean, sd, order), uniform_spline_expectations(coefficients, h, mean, sd),
  spline_normal_moments(coefficients, knots, x0, mean, sd, order), find_root(f, lo, hi, tol),
  tridiag_solve(sub, diag, sup, rhs).

All objects are immutable after construction and safe to share between callers.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import interpolate, linalg, optimize, signal, special

from errors import BracketError, NumericalError, ParameterError, SingularSystemError
from settings import MAX_QUADRATURE_ORDER, ROOT_MAX_ITERATIONS

logger = logging.getLogger(__name__)

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)
# Shortest side, in intervals, a broken spline is split into
MIN_BREAK_SEGMENT = 4


@dataclass(frozen=True, eq=False)
class Quadrature:
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def normal_points(self) -> np.ndarray:
        """Standard normal abscissae sqrt(2) * xi."""
        return math.sqrt(2.0) * self.nodes

    @property
    def normal_weights(self) -> np.ndarray:
        """Weights for E[f(Z)], Z ~ N(0, 1); they sum to one."""
        return self.weights / SQRT_PI

    def expect_normal(self, f) -> float:
        return float(np.sum(self.normal_weights * f(self.normal_points)))


def gauss_hermite(q: int) -> Quadrature:
    if isinstance(q, bool) or not isinstance(q, (int, np.integer)):
        raise ParameterError(f"quadrature order must be an integer, got {q!r}")
    if not 1 <= q <= MAX_QUADRATURE_ORDER:
        raise ParameterError(f"quadrature order must lie in [1, {MAX_QUADRATURE_ORDER}], got {q}")
    nodes, weights = hermgauss(int(q))
    # Exact symmetry xi_i = -xi_{q+1-i}
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return Quadrature(order=int(q), nodes=nodes, weights=weights)


class CubicSpline1D:
    """Natural cubic spline; values may be (n,) or (n, k) with knots along the first axis."""

    def __init__(self, knots, values):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.size < 3:
            raise ParameterError("a cubic spline needs at least 3 knots")
        if np.any(np.diff(knots) <= 0.0):
            raise ParameterError("spline knots must be strictly increasing")
        if values.shape[0] != knots.size:
            raise ParameterError(f"expected {knots.size} values along axis 0, got {values.shape[0]}")
        self.knots = knots
        self.values = values
        self._spline = interpolate.CubicSpline(knots, values, axis=0, bc_type='natural')
        self._lo_slope = self._spline(knots[0], 1)
        self._hi_slope = self._spline(knots[-1], 1)

    @property
    def second_derivatives(self) -> np.ndarray:
        return self._spline(self.knots, 2)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self._spline(x)
        below = x < self.knots[0]
        above = x > self.knots[-1]
        if np.any(below) or np.any(above):
            # Zero second derivative outside the knots: continue along the end tangent
            shape = (slice(None),) * x.ndim + (None,) * (self.values.ndim - 1)
            dx_lo = (x - self.knots[0])[shape]
            dx_hi = (x - self.knots[-1])[shape]
            lo = self.values[0] + self._lo_slope * dx_lo
            hi = self.values[-1] + self._hi_slope * dx_hi
            out = np.where(below[shape], lo, out)
            out = np.where(above[shape], hi, out)
        return out


def spline_build(knots, values) -> CubicSpline1D:
    return CubicSpline1D(knots, values)


def spline_eval(spline: CubicSpline1D, x):
    return spline(x)


class BrokenCubicSpline:
    """Natural cubic splines through the columns of values (n, k); column c may restart at knot breaks[c].

    At a break the curve is only continuous. Each side is fitted on its own with a not-a-knot end at the break, so
    a kink sitting on that knot is reproduced instead of smeared over the neighbouring intervals. Breaks of -1, or
    closer than MIN_BREAK_SEGMENT intervals to either end, are ignored. Points outside the knots take the end value;
    the caller owns any other extrapolation rule.
    """

    def __init__(self, knots, values, breaks=None):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.size < 3:
            raise ParameterError("a cubic spline needs at least 3 knots")
        if np.any(np.diff(knots) <= 0.0):
            raise ParameterError("spline knots must be strictly increasing")
        if values.ndim != 2 or values.shape[0] != knots.size:
            raise ParameterError(f"expected values of shape ({knots.size}, k), got {values.shape}")
        coefficients = np.array(interpolate.CubicSpline(knots, values, axis=0, bc_type='natural').c)
        last = knots.size - 1
        split = 0
        for column, b in enumerate(() if breaks is None else np.asarray(breaks, dtype=int)):
            if not MIN_BREAK_SEGMENT <= b <= last - MIN_BREAK_SEGMENT:
                continue
            left = interpolate.CubicSpline(knots[:b + 1], values[:b + 1, column], bc_type=('natural', 'not-a-knot'))
            right = interpolate.CubicSpline(knots[b:], values[b:, column], bc_type=('not-a-knot', 'natural'))
            coefficients[:, :b, column] = left.c
            coefficients[:, b:, column] = right.c
            split += 1
        self.knots = knots
        self.values = values
        self.split_columns = split
        self._poly = interpolate.PPoly(coefficients, knots, extrapolate=False)

    @property
    def coefficients(self) -> np.ndarray:
        """Piecewise power coefficients (4, n - 1, k); c[3 - p, i] multiplies (x - knots[i])^p."""
        return self._poly.c

    @property
    def end_slopes(self):
        return self._poly(self.knots[0], 1), self._poly(self.knots[-1], 1)

    def __call__(self, x):
        return self._poly(np.clip(np.asarray(x, dtype=float), self.knots[0], self.knots[-1]))


def _edge_density(u, z, sd, power):
    # u^power times the N(mean, sd^2) density at u; zero at infinite bounds
    finite = np.isfinite(u)
    u = np.where(finite, u, 0.0)
    z = np.where(finite, z, 0.0)
    return np.where(finite, u ** power * np.exp(-0.5 * z * z) / (sd * SQRT_2PI), 0.0)


def normal_partial_moments(lo, hi, mean, sd: float, order: int) -> np.ndarray:
    """E[U^p; lo <= U < hi] for U ~ N(mean, sd^2) and p = 0..order, stacked along a new leading axis.

    lo, hi and mean broadcast together and the bounds may be infinite. The recursion runs on U itself, so a short
    interval far out in a tail keeps its relative accuracy.
    """
    if sd <= 0.0:
        raise ParameterError(f"partial moments need a positive standard deviation, got {sd}")
    lo, hi, mean = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lo, hi, mean)))
    a = (lo - mean) / sd
    b = (hi - mean) / sd
    moments = np.empty((order + 1,) + a.shape)
    # Difference the upper tails when the interval lies above the mean
    moments[0] = np.where(a > 0.0, special.ndtr(-a) - special.ndtr(-b), special.ndtr(b) - special.ndtr(a))
    variance = sd * sd
    for p in range(1, order + 1):
        edges = _edge_density(lo, a, sd, p - 1) - _edge_density(hi, b, sd, p - 1)
        previous = (p - 1) * moments[p - 2] if p >= 2 else 0.0
        moments[p] = mean * moments[p - 1] + variance * (previous + edges)
    return moments


def uniform_spline_expectations(coefficients, h: float, mean: float, sd: float) -> np.ndarray:
    """E[S(x_i + X); x_0 <= x_i + X < x_n] at every knot x_i of a spline on uniform knots, X ~ N(mean, sd^2).

    coefficients has the (4, n, ...) piecewise layout of BrokenCubicSpline. Each piece is integrated exactly
    against the normal density; the moment table depends only on the knot offset, so the sum over pieces is one
    correlation per power. Returns shape (n + 1, ...).
    """
    c = np.asarray(coefficients, dtype=float)
    pieces = c.shape[1]
    offsets = np.arange(-pieces, pieces)
    table = normal_partial_moments(0.0, h, mean - offsets * h, sd, 3)
    trailing = (1,) * (c.ndim - 2)
    total = 0.0
    for p in range(4):
        taps = table[p, ::-1].reshape((-1,) + trailing)
        total = total + signal.fftconvolve(c[3 - p], taps, axes=0)[pieces - 1:2 * pieces]
    return total


def spline_normal_moments(coefficients, knots, x0: float, mean: float, sd: float, order: int) -> np.ndarray:
    """E[S(x0 + X) Z^m; knots[0] <= x0 + X < knots[-1]] for m = 0..order, X = mean + sd Z, Z ~ N(0, 1).

    Shape (order + 1, ...) where ... are the spline's value columns.
    """
    c = np.asarray(coefficients, dtype=float)
    knots = np.asarray(knots, dtype=float)
    starts = knots[:-1] - x0
    moments = normal_partial_moments(0.0, np.diff(knots), mean - starts, sd, 3 + order)
    centre = (starts - mean) / sd
    out = []
    for m in range(order + 1):
        total = 0.0
        # Z = U / sd + centre on each piece, U the offset from the piece's left knot
        for j in range(m + 1):
            scale = math.comb(m, j) * centre ** (m - j) / sd ** j
            for p in range(4):
                total = total + np.tensordot(scale * moments[p + j], c[3 - p], axes=(0, 0))
        out.append(total)
    return np.stack(out)


def _cubic_piece(f0, f1, d0, d1, t):
    # d0, d1 are second differences (h^2 * f''); linear continuation outside [0, 1]
    a = 1.0 - t
    inside = a * f0 + t * f1 + ((a ** 3 - a) * d0 + (t ** 3 - t) * d1) / 6.0
    below = f0 + t * (f1 - f0 - (2.0 * d0 + d1) / 6.0)
    above = f1 + (t - 1.0) * (f1 - f0 + (d0 + 2.0 * d1) / 6.0)
    return np.where(t < 0.0, below, np.where(t > 1.0, above, inside))


def _uniform_spacing(grid, name):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 4:
        raise ParameterError(f"{name}-grid needs at least 4 nodes")
    steps = np.diff(grid)
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    if h <= 0.0 or not np.allclose(steps, h, rtol=1e-8, atol=0.0):
        raise ParameterError(f"{name}-grid must be uniform and increasing")
    return float(grid[0]), float(h), grid.size


class UniformCubicRows:
    """Rows of samples on one uniform grid, each interpolated by a local cubic spline."""

    def __init__(self, x0: float, h: float, values):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[1] < 4:
            raise ParameterError("uniform cubic rows need at least 4 nodes")
        self.x0 = float(x0)
        self.h = float(h)
        self.values = values
        d2 = np.empty_like(values)
        d2[:, 1:-1] = values[:, 2:] - 2.0 * values[:, 1:-1] + values[:, :-2]
        d2[:, 0] = 2.0 * d2[:, 1] - d2[:, 2]
        d2[:, -1] = 2.0 * d2[:, -2] - d2[:, -3]
        self.second_differences = d2

    @property
    def size(self) -> int:
        return self.values.shape[1]

    def __call__(self, rows, x):
        rows = np.asarray(rows)
        u = (np.asarray(x, dtype=float) - self.x0) / self.h
        i = np.clip(np.floor(u), 0, self.size - 2).astype(np.intp)
        t = u - i
        v, d2 = self.values, self.second_differences
        return _cubic_piece(v[rows, i], v[rows, i + 1], d2[rows, i], d2[rows, i + 1], t)


class BicubicSpline2D:
    """Bi-cubic spline on a uniform grid; values[j, i] is the sample at (x_i, y_j)."""

    def __init__(self, x_grid, y_grid, values):
        self.x0, self.hx, self.nx = _uniform_spacing(x_grid, "x")
        self.y0, self.hy, self.ny = _uniform_spacing(y_grid, "y")
        values = np.asarray(values, dtype=float)
        if values.shape != (self.ny, self.nx):
            raise ParameterError(f"value matrix must be {(self.ny, self.nx)}, got {values.shape}")
        self.rows = UniformCubicRows(self.x0, self.hx, values)

    @property
    def values(self) -> np.ndarray:
        return self.rows.values

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        v = (y - self.y0) / self.hy
        j = np.clip(np.floor(v), 0, self.ny - 2).astype(np.intp)
        start = np.clip(j - 1, 0, self.ny - 4)
        # Four interpolations along x, one along y
        f = [self.rows(start + k, x) for k in range(4)]
        d_first = f[0] - 2.0 * f[1] + f[2]
        d_second = f[1] - 2.0 * f[2] + f[3]
        offset = j - (start + 1)
        d_lo = d_first + offset * (d_second - d_first)
        d_hi = d_first + (offset + 1) * (d_second - d_first)
        stacked = np.stack(f)
        pos = (j - start)[None, ...]
        f_lo = np.take_along_axis(stacked, pos, axis=0)[0]
        f_hi = np.take_along_axis(stacked, pos + 1, axis=0)[0]
        return _cubic_piece(f_lo, f_hi, d_lo, d_hi, v - j)


def bicubic_eval(surface: BicubicSpline2D, x, y):
    return surface(x, y)


def find_root(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = ROOT_MAX_ITERATIONS) -> float:
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return float(lo)
    if f_hi == 0.0:
        return float(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={f_lo:.6g}, {f_hi:.6g}", lo, hi, f_lo, f_hi)
    try:
        root, info = optimize.brentq(f, lo, hi, xtol=tol, maxiter=max_iter, full_output=True)
    except RuntimeError as exc:
        raise NumericalError("root search did not converge", {"lo": lo, "hi": hi}) from exc
    logger.debug("root %.12g after %d iterations", root, info.iterations)
    return float(root)


def tridiag_solve(sub, diag, sup, rhs):
    diag = np.asarray(diag, dtype=float)
    n = diag.size
    banded = np.zeros((3, n))
    banded[0, 1:] = sup
    banded[1] = diag
    banded[2, :-1] = sub
    try:
        return linalg.solve_banded((1, 1), banded, np.asarray(rhs, dtype=float))
    except linalg.LinAlgError as exc:
        raise SingularSystemError(f"tridiagonal system is singular: {exc}") from exc
