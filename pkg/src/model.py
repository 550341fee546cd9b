"""
model.py

Market dynamics, fee structures, mortality and discounting shared by every RiderQuad solver.

The risky asset follows geometric Brownian motion with piecewise constant rates and volatilities on the contract
event grid 0 = t_0 < t_1 < ... < t_N = T. Period n covers (t_{n-1}, t_n] and carries r_n and sigma_n. The wealth
account moves with the asset net of the guarantee fee; a continuous fee enters the drift while discrete fees are
deducted at each event before any other contract action.

Classes:
- Event: everything a rider needs to know about event n (index, time, period length, ratchet flag, maturity).
- MarketModel: event times, per-period rates/volatilities and the ratchet subset.
- FeeStructure: continuous, discrete-on-wealth or discrete-on-base fee with an annual rate.
- MortalityModel: per-period death probabilities q_n and survival probabilities p_n (p_0 = 1).
- StatePoint: a (W, A) pair.

Functions:
- event_schedule(maturity, events_per_year, ratchet_every): equally spaced event times and ratchet indices.
- flat_market(...): MarketModel with constant rate and volatility.
- discount(model, i, j): discount factor from t_j back to t_i.
- wealth_step(model, fee, n, w, z): lognormal wealth transition over period n.
- apply_fee_deduction(fee, dt, w, a): discrete fee deduction at an event.
- continuous_equivalent_fee / discrete_equivalent_fee: convert between fee conventions over one period.
- load_life_table(path): read an (age, annual death probability) table with pandas.
- mortality_from_life_table(table, entry_age, times): per-period q_n with survival linear within each year of age.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from errors import MortalityDataError, ParameterError

logger = logging.getLogger(__name__)

FEE_KINDS = ('continuous', 'discrete_wealth', 'discrete_base')


@dataclass(frozen=True)
class Event:
    index: int
    time: float
    dt: float
    ratchet: bool
    maturity: float


class MarketModel:
    def __init__(self, times, rates, volatilities, ratchet_indices=()):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ParameterError("at least one event period is required")
        if times[0] != 0.0:
            raise ParameterError("event times must start at t_0 = 0")
        if np.any(np.diff(times) <= 0.0):
            raise ParameterError("event times must be strictly increasing")
        n_periods = times.size - 1
        rates = np.broadcast_to(np.asarray(rates, dtype=float), (n_periods,)).copy()
        volatilities = np.broadcast_to(np.asarray(volatilities, dtype=float), (n_periods,)).copy()
        if np.any(volatilities < 0.0):
            raise ParameterError("volatilities must be non-negative")
        ratchets = frozenset(int(i) for i in ratchet_indices)
        if any(not 1 <= i <= n_periods for i in ratchets):
            raise ParameterError(f"ratchet indices must be event indices in [1, {n_periods}]")
        for array in (times, rates, volatilities):
            array.setflags(write=False)
        self.times = times
        self.rates = rates
        self.volatilities = volatilities
        self.ratchet_indices = ratchets

    def __repr__(self):
        return (f"MarketModel(N={self.N}, T={self.maturity:g}, r={self.rates.tolist()}, "
                f"sigma={self.volatilities.tolist()}, ratchets={sorted(self.ratchet_indices)})")

    @property
    def N(self) -> int:
        return self.times.size - 1

    @property
    def maturity(self) -> float:
        return float(self.times[-1])

    def _check_period(self, n):
        if not 1 <= n <= self.N:
            raise ParameterError(f"period index {n} outside [1, {self.N}]")

    def dt(self, n: int) -> float:
        self._check_period(n)
        return float(self.times[n] - self.times[n - 1])

    def rate(self, n: int) -> float:
        self._check_period(n)
        return float(self.rates[n - 1])

    def volatility(self, n: int) -> float:
        self._check_period(n)
        return float(self.volatilities[n - 1])

    def is_ratchet(self, n: int) -> bool:
        return n in self.ratchet_indices

    def event(self, n: int) -> Event:
        return Event(index=n, time=float(self.times[n]), dt=self.dt(n), ratchet=self.is_ratchet(n),
                     maturity=self.maturity)

    def log_return_moments(self, fee_drift: float = 0.0):
        """Mean and standard deviation of ln(W(T)/W(0)) with no withdrawals."""
        dts = np.diff(self.times)
        mean = float(np.sum((self.rates - fee_drift - 0.5 * self.volatilities ** 2) * dts))
        stdev = float(math.sqrt(np.sum(self.volatilities ** 2 * dts)))
        return mean, stdev

    def bumped(self, rate_shift: float = 0.0, vol_shift: float = 0.0) -> "MarketModel":
        return MarketModel(self.times, self.rates + rate_shift, np.maximum(self.volatilities + vol_shift, 0.0),
                           self.ratchet_indices)


def event_schedule(maturity: float, events_per_year: int, ratchet_every: int = 0):
    if maturity <= 0.0:
        raise ParameterError("maturity must be positive")
    if events_per_year < 1:
        raise ParameterError("at least one event per year is required")
    n_events = int(round(maturity * events_per_year))
    if n_events < 1 or not math.isclose(n_events, maturity * events_per_year, rel_tol=1e-9):
        raise ParameterError(f"maturity {maturity} is not a whole number of event periods")
    times = np.linspace(0.0, maturity, n_events + 1)
    ratchets = tuple(range(ratchet_every, n_events + 1, ratchet_every)) if ratchet_every > 0 else ()
    return times, ratchets


def flat_market(maturity: float, events_per_year: int, rate: float, volatility: float,
                ratchet_every: int = 0) -> MarketModel:
    times, ratchets = event_schedule(maturity, events_per_year, ratchet_every)
    return MarketModel(times, rate, volatility, ratchets)


@dataclass(frozen=True)
class FeeStructure:
    kind: str = 'continuous'
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in FEE_KINDS:
            raise ParameterError(f"fee kind must be one of {FEE_KINDS}, got {self.kind!r}")
        if self.rate < 0.0:
            raise ParameterError("fee rate must be non-negative")

    @property
    def is_discrete(self) -> bool:
        return self.kind != 'continuous'

    @property
    def drift_rate(self) -> float:
        return 0.0 if self.is_discrete else self.rate

    @property
    def rate_bp(self) -> float:
        return self.rate * 1e4

    def with_rate(self, rate: float) -> "FeeStructure":
        return replace(self, rate=rate)

    def deduct(self, dt: float, w, a):
        return apply_fee_deduction(self, dt, w, a)


def continuous_equivalent_fee(discrete_rate: float, dt: float) -> float:
    if discrete_rate * dt >= 1.0:
        raise ParameterError("discrete fee consumes the whole account within one period")
    return -math.log1p(-discrete_rate * dt) / dt


def discrete_equivalent_fee(continuous_rate: float, dt: float) -> float:
    return -math.expm1(-continuous_rate * dt) / dt


@dataclass(frozen=True, eq=False)
class MortalityModel:
    death_probabilities: np.ndarray
    survival_probabilities: np.ndarray

    @classmethod
    def none(cls, n_periods: int) -> "MortalityModel":
        return cls.from_probabilities(np.zeros(n_periods))

    @classmethod
    def from_probabilities(cls, q) -> "MortalityModel":
        q = np.asarray(q, dtype=float)
        if q.ndim != 1 or q.size < 1:
            raise ParameterError("death probabilities must be a non-empty vector")
        if np.any((q < 0.0) | (q > 1.0)) or not np.all(np.isfinite(q)):
            raise ParameterError("death probabilities must lie in [0, 1]")
        # Index 0 is t_0: q_0 = 0, p_0 = 1
        q_full = np.concatenate(([0.0], q))
        p_full = np.empty_like(q_full)
        p_full[0] = 1.0
        for n in range(1, q_full.size):
            p_full[n] = p_full[n - 1] * (1.0 - q_full[n])
        q_full.setflags(write=False)
        p_full.setflags(write=False)
        return cls(q_full, p_full)

    @property
    def N(self) -> int:
        return self.death_probabilities.size - 1

    @property
    def is_trivial(self) -> bool:
        return not np.any(self.death_probabilities > 0.0)

    def q(self, n: int) -> float:
        return float(self.death_probabilities[n])

    def p(self, n: int) -> float:
        return float(self.survival_probabilities[n])


@dataclass(frozen=True)
class StatePoint:
    W: float
    A: float

    def __post_init__(self):
        if self.W < 0.0 or self.A < 0.0:
            raise ParameterError(f"state must be non-negative, got W={self.W}, A={self.A}")


def discount(model: MarketModel, i: int, j: int) -> float:
    if i > j:
        raise ParameterError(f"discount requires i <= j, got i={i}, j={j}")
    if i < 0 or j > model.N:
        raise ParameterError(f"event indices must lie in [0, {model.N}]")
    dts = np.diff(model.times)[i:j]
    return float(math.exp(-np.sum(model.rates[i:j] * dts)))


def log_step_moments(model: MarketModel, fee: FeeStructure, n: int):
    """Mean and standard deviation of ln(W(t_n^-) / W(t_{n-1}^+)) over period n."""
    dt = model.dt(n)
    sigma = model.volatility(n)
    return (model.rate(n) - fee.drift_rate - 0.5 * sigma * sigma) * dt, sigma * math.sqrt(dt)


def wealth_step(model: MarketModel, fee: FeeStructure, n: int, w, z):
    mean, stdev = log_step_moments(model, fee, n)
    return np.asarray(w, dtype=float) * np.exp(mean + stdev * np.asarray(z, dtype=float))


def apply_fee_deduction(fee: FeeStructure, dt: float, w, a):
    if fee.kind == 'discrete_wealth':
        return np.asarray(w, dtype=float) * (1.0 - fee.rate * dt)
    if fee.kind == 'discrete_base':
        return np.maximum(np.asarray(w, dtype=float) - np.asarray(a, dtype=float) * fee.rate * dt, 0.0)
    return w


def load_life_table(path) -> pd.Series:
    try:
        raw = pd.read_csv(path, sep=r'[,\s]+', comment='#', header=None, engine='python', usecols=[0, 1],
                          names=['age', 'q'])
    except FileNotFoundError as exc:
        raise MortalityDataError(f"life table not found: {path}") from exc
    except (ValueError, pd.errors.ParserError) as exc:
        raise MortalityDataError(f"cannot parse life table {path}: {exc}") from exc
    table = raw.apply(pd.to_numeric, errors='coerce').dropna()
    if table.empty:
        raise MortalityDataError(f"life table {path} has no numeric rows")
    if not np.allclose(table['age'], np.round(table['age'])):
        raise MortalityDataError("life table ages must be integers")
    table = table.astype({'age': int}).drop_duplicates('age', keep='last').sort_values('age')
    if ((table['q'] < 0.0) | (table['q'] > 1.0)).any():
        raise MortalityDataError("annual death probabilities must lie in [0, 1]")
    logger.debug("loaded life table %s: ages %d..%d", path, table['age'].min(), table['age'].max())
    return table.set_index('age')['q']


def _as_age_series(table) -> pd.Series:
    if isinstance(table, pd.Series):
        return table
    if isinstance(table, pd.DataFrame):
        return table.set_index(table.columns[0])[table.columns[1]]
    if isinstance(table, dict):
        return pd.Series(table, dtype=float)
    rows = list(table)
    return pd.Series({int(age): float(q) for age, q in rows}, dtype=float)


def mortality_from_life_table(table, entry_age: float, times) -> MortalityModel:
    annual = _as_age_series(table)
    times = np.asarray(times, dtype=float)
    ages = entry_age + times
    first = int(math.floor(entry_age))
    last = int(math.ceil(ages[-1])) - 1
    needed = range(first, max(last, first) + 1)
    missing = [age for age in needed if age not in annual.index]
    if missing:
        raise MortalityDataError(f"life table is missing ages {missing[0]}..{missing[-1]} "
                                 f"({len(missing)} ages) for entry age {entry_age}")
    q_by_age = annual.reindex(needed).to_numpy(dtype=float)
    # Survival curve at integer ages from the entry cohort, linear within each year
    survival_at_age = np.concatenate(([1.0], np.cumprod(1.0 - q_by_age)))

    def survival(age):
        k = np.clip(np.floor(age).astype(int) - first, 0, len(q_by_age) - 1)
        frac = age - (first + k)
        return survival_at_age[k] * (1.0 - frac * q_by_age[k])

    s = survival(ages)
    p = s / s[0]
    q = np.empty(times.size - 1)
    for n in range(1, times.size):
        q[n - 1] = 1.0 if p[n - 1] <= 0.0 else 1.0 - p[n] / p[n - 1]
    return MortalityModel.from_probabilities(np.clip(q, 0.0, 1.0))
