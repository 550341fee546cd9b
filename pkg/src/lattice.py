"""
lattice.py

The (W, A) grid shared by the quadrature and finite-difference solvers, the value surfaces stored on it, and the
withdrawal strategies evaluated at each event.

Wealth nodes W_0 < ... < W_M are uniform in ln W between a tiny floor (1e-10) and an upper bound that covers the
high quantiles of the terminal wealth distribution. The benefit base grid has a dedicated A = 0 row followed by
rows uniform in ln A. The wealth grid is shifted slightly so W(0) falls exactly on a node. When A(0) is itself a
wealth node (a fresh contract) every positive base row is a wealth node too, taken with a common stride, so the
kink of a guarantee at W = A sits on a knot of its row's wealth spline. Otherwise the base grid is anchored at
A(0) on its own.

Classes:
- Lattice: node coordinates plus interpolation helpers.
- WealthSpline: the per-row wealth interpolant in ln W and its exact expectation over a lognormal step.
- ValueSurface: Q (or the mortality-averaged value) on every node at one side of one event.
- SurfaceInterpolator: off-grid evaluation used by the jump condition (bi-cubic in (ln W, ln A)).
- StrategySpec: static rule, optimal, or threshold-suboptimal withdrawal behaviour.

Off-grid rules:
- W below W_0 is clamped to W_0; above W_M a row continues linearly in W along its end slope.
- A = 0 uses the zero-base row; 0 < A < A_lowest blends the zero-base row and the lowest positive row linearly in A.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from errors import NumericalError, ParameterError
from numerics import (BicubicSpline2D, BrokenCubicSpline, CubicSpline1D, UniformCubicRows, normal_partial_moments,
                      spline_normal_moments, uniform_spline_expectations)
from settings import (BASE_FLOOR_FRACTION, DEFAULT_WITHDRAWAL_CANDIDATES, MIN_UPPER_MULTIPLE, TAIL_STDEVS,
                      WEALTH_FLOOR)

logger = logging.getLogger(__name__)

SIDES = ('pre', 'post')
STRATEGY_KINDS = ('static', 'optimal', 'threshold')
STATIC_RULES = ('none', 'contractual', 'wealth_rate', 'fixed')
# Two log nodes closer than this are the same node
NODE_MATCH = 1e-9


def _anchored_log_grid(lo: float, anchor: float, hi: float, intervals: int):
    """Uniform log grid starting at lo with `intervals` steps, reaching at least hi and hitting anchor exactly."""
    x_lo, x_hi = math.log(lo), math.log(hi)
    step = (x_hi - x_lo) / intervals
    if anchor is not None and lo < anchor < hi:
        k = max(1, int(math.floor((math.log(anchor) - x_lo) / step)))
        step = (math.log(anchor) - x_lo) / k
    return x_lo + step * np.arange(intervals + 1)


def _aligned_base_grid(log_wealth, anchor: int, base_lo: float, rows: int):
    """`rows` wealth nodes with a common index stride through node `anchor`, topping out as close to W_M as the
    stride allows and reaching down to about base_lo. None when no stride fits."""
    intervals = log_wealth.size - 1
    if rows - 1 > intervals:
        return None
    h = (log_wealth[-1] - log_wealth[0]) / intervals
    nominal = (log_wealth[-1] - math.log(base_lo)) / (rows - 1)
    stride = max(1, min(int(round(nominal / h)), intervals // (rows - 1)))
    while True:
        top = anchor + (intervals - anchor) // stride * stride
        lowest = top - stride * (rows - 1)
        if 0 <= lowest <= anchor:
            return log_wealth[lowest:top + 1:stride].copy()
        if stride == 1:
            return None
        stride -= 1


def _matching_nodes(log_wealth, log_base):
    # Index of the wealth node equal to each positive base node, -1 where there is none
    nearest = np.clip(np.searchsorted(log_wealth, log_base), 1, log_wealth.size - 1)
    nearest = np.where(np.abs(log_wealth[nearest - 1] - log_base) < np.abs(log_wealth[nearest] - log_base),
                       nearest - 1, nearest)
    return np.where(np.abs(log_wealth[nearest] - log_base) < NODE_MATCH, nearest, -1)


class Lattice:
    def __init__(self, log_wealth, log_base):
        log_wealth = np.asarray(log_wealth, dtype=float)
        log_base = np.asarray(log_base, dtype=float)
        if log_wealth.size < 4 or log_base.size < 4:
            raise ParameterError("lattice needs at least 4 wealth nodes and 4 positive base nodes")
        if np.any(np.diff(log_wealth) <= 0.0) or np.any(np.diff(log_base) <= 0.0):
            raise ParameterError("lattice nodes must be strictly increasing")
        self.log_wealth = log_wealth
        self.log_base = log_base
        self.wealth = np.exp(log_wealth)
        self.base = np.concatenate(([0.0], np.exp(log_base)))
        self.h_wealth = float((log_wealth[-1] - log_wealth[0]) / (log_wealth.size - 1))
        self.h_base = float((log_base[-1] - log_base[0]) / (log_base.size - 1))
        # Per row, the wealth node where W = A (-1 for the zero row and rows off the wealth grid)
        self.kink_nodes = np.concatenate(([-1], _matching_nodes(log_wealth, log_base)))

    @classmethod
    def build(cls, model, w0: float, a0: float, wealth_nodes: int, base_nodes: int, fee_drift: float = 0.0):
        """wealth_nodes = M + 1 points, base_nodes = J rows including the A = 0 row."""
        if w0 <= WEALTH_FLOOR:
            raise ParameterError(f"initial wealth must exceed {WEALTH_FLOOR}")
        if a0 < 0.0:
            raise ParameterError("initial benefit base must be non-negative")
        if wealth_nodes < 4 or base_nodes < 5:
            raise ParameterError("lattice needs M + 1 >= 4 wealth nodes and J >= 5 base rows")
        mean, stdev = model.log_return_moments(fee_drift)
        upper = max(w0 * math.exp(abs(mean) + TAIL_STDEVS * stdev), MIN_UPPER_MULTIPLE * max(w0, a0))
        log_wealth = _anchored_log_grid(WEALTH_FLOOR, w0, upper, wealth_nodes - 1)
        base_lo = BASE_FLOOR_FRACTION * max(w0, a0)
        if 0.0 < a0 < base_lo:
            base_lo = a0
        log_base = None
        if a0 > 0.0:
            anchor = _matching_nodes(log_wealth, np.array([math.log(a0)]))[0]
            if anchor >= 0:
                log_base = _aligned_base_grid(log_wealth, int(anchor), base_lo, base_nodes - 1)
        if log_base is None:
            log_base = _anchored_log_grid(base_lo, a0 if a0 > base_lo else None, math.exp(log_wealth[-1]),
                                          base_nodes - 2)
        lattice = cls(log_wealth, log_base)
        logger.debug("lattice W in [%.3g, %.4g] (M=%d), A in {0} + [%.4g, %.4g] (J=%d), %d rows on wealth nodes",
                     lattice.wealth[0], lattice.wealth[-1], lattice.M, lattice.base[1], lattice.base[-1], lattice.J,
                     int(np.sum(lattice.kink_nodes >= 0)))
        return lattice

    @property
    def M(self) -> int:
        return self.wealth.size - 1

    @property
    def J(self) -> int:
        return self.base.size

    @property
    def shape(self):
        return self.J, self.M + 1

    def mesh(self):
        """(W, A) arrays broadcastable to the surface shape (J, M + 1)."""
        return self.wealth[None, :], self.base[:, None]

    def wealth_spline(self, values) -> "WealthSpline":
        return WealthSpline(self, values)

    def interpolator(self, surface) -> "SurfaceInterpolator":
        return SurfaceInterpolator(self, surface.values if isinstance(surface, ValueSurface) else surface)

    def interpolate_base(self, row_values, a: float) -> float:
        """Value at benefit base a from one value per row."""
        row_values = np.asarray(row_values, dtype=float)
        if a <= 0.0:
            return float(row_values[0])
        lowest = self.base[1]
        if a < lowest:
            return float(row_values[0] + a / lowest * (row_values[1] - row_values[0]))
        spline = CubicSpline1D(self.log_base, row_values[1:])
        return float(spline(math.log(a)))

    def point_value(self, values, w: float, a: float) -> float:
        return self.interpolate_base(self.wealth_spline(values)(w), a)


class WealthSpline:
    """Cubic spline in ln W through every row of a surface (J, M + 1), broken at the row's W = A node.

    Below W_0 the W_0 value holds; above W_M each row continues linearly in W along the spline's end slope. The
    expectations over a lognormal step W -> W e^X, X ~ N(mean, sd^2), integrate every cubic piece and both tails
    exactly, so no quadrature error enters the continuation.
    """

    def __init__(self, lattice: Lattice, values):
        values = np.asarray(values, dtype=float)
        if values.shape != lattice.shape:
            raise ParameterError(f"surface must be {lattice.shape}, got {values.shape}")
        self.lattice = lattice
        self.spline = BrokenCubicSpline(lattice.log_wealth, values.T, lattice.kink_nodes)
        self.floor_values = values[:, 0]
        self.top_values = values[:, -1]
        self.top_slopes = self.spline.end_slopes[1] / lattice.wealth[-1]

    def __call__(self, w):
        """Row values at wealth w, shape w.shape + (J,)."""
        lat = self.lattice
        w = np.asarray(w, dtype=float)
        inside = self.spline(np.log(np.maximum(w, lat.wealth[0])))
        above = w > lat.wealth[-1]
        if not np.any(above):
            return inside
        beyond = self.top_values + self.top_slopes * (w - lat.wealth[-1])[..., None]
        return np.where(above[..., None], beyond, inside)

    def expect_lognormal(self, mean: float, sd: float) -> np.ndarray:
        """E[V(W_i e^X)] at every node, shape (J, M + 1)."""
        lat = self.lattice
        if sd <= 0.0:
            return self(lat.wealth * math.exp(mean)).T
        interior = uniform_spline_expectations(self.spline.coefficients, lat.h_wealth, mean, sd)
        below = (lat.log_wealth[0] - lat.log_wealth - mean) / sd
        above = (lat.log_wealth[-1] - lat.log_wealth - mean) / sd
        p_above = special.ndtr(-above)
        # E[W e^X - W_M; W e^X >= W_M]
        excess = lat.wealth * math.exp(mean + 0.5 * sd * sd) * special.ndtr(sd - above) - lat.wealth[-1] * p_above
        tails = (np.outer(special.ndtr(below), self.floor_values) + np.outer(p_above, self.top_values)
                 + np.outer(excess, self.top_slopes))
        return (interior + tails).T

    def expect_at(self, w: float, mean: float, sd: float, order: int = 0) -> np.ndarray:
        """E[V(w e^X) Z^m] for m = 0..order with X = mean + sd Z, shape (order + 1, J)."""
        lat = self.lattice
        x = math.log(max(w, lat.wealth[0]))
        if sd <= 0.0:
            if order > 0:
                raise ParameterError("moments in Z need a positive standard deviation")
            return self(math.exp(x + mean))[None, :]
        body = spline_normal_moments(self.spline.coefficients, lat.log_wealth, x, mean, sd, order)
        below = (lat.log_wealth[0] - x - mean) / sd
        above = (lat.log_wealth[-1] - x - mean) / sd
        z_below = normal_partial_moments(-np.inf, below, 0.0, 1.0, order)
        z_above = normal_partial_moments(above, np.inf, 0.0, 1.0, order)
        # Weighting by W e^X tilts Z to N(sd, 1)
        tilted = normal_partial_moments(above, np.inf, sd, 1.0, order)
        excess = math.exp(x + mean + 0.5 * sd * sd) * tilted - lat.wealth[-1] * z_above
        return (body + np.outer(z_below, self.floor_values) + np.outer(z_above, self.top_values)
                + np.outer(excess, self.top_slopes))


class SurfaceInterpolator:
    def __init__(self, lattice: Lattice, values):
        self.lattice = lattice
        self.zero_row = UniformCubicRows(lattice.log_wealth[0], lattice.h_wealth, values[:1])
        self.positive = BicubicSpline2D(lattice.log_wealth, lattice.log_base, values[1:])

    def __call__(self, w, a):
        lat = self.lattice
        w, a = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(a, dtype=float))
        x = np.log(np.maximum(w, lat.wealth[0]))
        lowest = lat.base[1]
        y = np.log(np.maximum(a, lowest))
        on_positive = self.positive(x, y)
        small = a < lowest
        if not np.any(small):
            return on_positive
        on_zero = self.zero_row(np.zeros(x.shape, dtype=np.intp), x)
        blend = on_zero + np.clip(a / lowest, 0.0, 1.0) * (on_positive - on_zero)
        return np.where(small, blend, on_positive)


@dataclass(frozen=True, eq=False)
class ValueSurface:
    values: np.ndarray
    time_index: int
    side: str
    controls: np.ndarray = None

    @classmethod
    def checked(cls, values, time_index: int, side: str, controls=None) -> "ValueSurface":
        if side not in SIDES:
            raise ParameterError(f"surface side must be one of {SIDES}")
        values = np.asarray(values, dtype=float)
        finite = np.isfinite(values)
        if not np.all(finite):
            rows, cols = np.nonzero(~finite)
            raise NumericalError("non-finite contract values", {
                'event': time_index, 'side': side, 'count': rows.size, 'first_row': int(rows[0]),
                'first_node': int(cols[0])})
        # Interpolation can undershoot zero by rounding near the wealth floor
        values = np.maximum(values, 0.0)
        logger.debug("event %d%s: Q in [%.6g, %.6g]", time_index, '-' if side == 'pre' else '+',
                     values.min(), values.max())
        return cls(values, time_index, side, controls)


@dataclass(frozen=True)
class StrategySpec:
    kind: str = 'static'
    rule: str = 'none'
    amount: float = 0.0
    theta: float = 0.0
    candidates: int = DEFAULT_WITHDRAWAL_CANDIDATES

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ParameterError(f"strategy kind must be one of {STRATEGY_KINDS}, got {self.kind!r}")
        if self.rule not in STATIC_RULES:
            raise ParameterError(f"static rule must be one of {STATIC_RULES}, got {self.rule!r}")
        if self.theta < 0.0:
            raise ParameterError("threshold theta must be non-negative")
        if self.amount < 0.0:
            raise ParameterError("static withdrawal amount must be non-negative")
        if self.candidates < 2:
            raise ParameterError("at least 2 withdrawal candidates are required")

    @classmethod
    def static(cls, rule: str = 'none', amount: float = 0.0) -> "StrategySpec":
        return cls(kind='static', rule=rule, amount=amount)

    @classmethod
    def optimal(cls, candidates: int = DEFAULT_WITHDRAWAL_CANDIDATES) -> "StrategySpec":
        return cls(kind='optimal', candidates=candidates)

    @classmethod
    def threshold(cls, theta: float, candidates: int = DEFAULT_WITHDRAWAL_CANDIDATES) -> "StrategySpec":
        return cls(kind='threshold', rule='contractual', theta=theta, candidates=candidates)

    @property
    def is_static(self) -> bool:
        return self.kind == 'static'

    def describe(self) -> str:
        if self.kind == 'optimal':
            return f"optimal (K={self.candidates})"
        if self.kind == 'threshold':
            return f"threshold theta={self.theta:g} (K={self.candidates})"
        if self.rule in ('wealth_rate', 'fixed'):
            return f"static {self.rule}={self.amount:g}"
        return f"static {self.rule}"

    def static_withdrawal(self, rider, event, w, a):
        """Withdrawal of the static (or default) rule, clipped to the admissible set."""
        w, a = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(a, dtype=float))
        if not rider.allows_withdrawal or self.rule == 'none':
            return np.zeros_like(w)
        if self.rule == 'contractual':
            gamma = rider.contractual_amount(event, w, a)
        elif self.rule == 'wealth_rate':
            gamma = self.amount * w * event.dt
        else:
            gamma = np.full_like(w, self.amount)
        return np.clip(gamma, 0.0, rider.admissible_max(event, w, a))

    def candidate_withdrawals(self, rider, event, w, a):
        """Sorted candidate grid (..., K + 1): K equally spaced fractions of gamma_max plus G_n."""
        w, a = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(a, dtype=float))
        upper = rider.admissible_max(event, w, a)
        contractual = np.clip(rider.contractual_amount(event, w, a), 0.0, upper)
        fractions = np.linspace(0.0, 1.0, self.candidates)
        grid = np.concatenate((upper[..., None] * fractions, contractual[..., None]), axis=-1)
        return np.sort(grid, axis=-1)
