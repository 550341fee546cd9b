"""
riders.py

Contract specifications for the variable-annuity guarantee riders priced by RiderQuad. Every rider exposes the
same vectorised interface so the grid solvers and the Monte Carlo pricer can treat contracts uniformly.

Riders:
- GmabRider: accumulation benefit on a super or pension account. Withdrawals are paid in full but may cut the
  protected capital by more than the amount withdrawn; the protected capital can ratchet up to the wealth account.
- GmwbRider: withdrawal benefit. The basic variant reduces the benefit base by the withdrawal and penalises the
  cashflow above the contractual amount; the industry variants (spec1, spec2, spec3) penalise the benefit base too
  and apply excess and early-withdrawal charges to the cashflow.
- GlwbRider: lifetime withdrawal benefit with bonus (roll-up) on dates with no withdrawal and optional ratchets.
- GmibRider: income benefit paying max(W, A * annuity ratio) at maturity.
- GmdbRider: death benefit of type 0-3; the benefit base may roll up and ratchet.

All riders accept a death benefit type (default 3: the wealth account) which sets D_n. Same-date events are applied
in the order: discrete fee (solver side), ratchet if configured before the withdrawal, withdrawal, ratchet if
configured after. GMAB applies its combined ratchet/penalty formula in one step.

Interface (all methods broadcast over numpy arrays):
- contractual_amount(event, w, a) -> G_n
- admissible_max(event, w, a) -> upper end of the admissible withdrawal interval [0, gamma_max]
- transition(event, w, a, gamma) -> (W+, A+, cashflow)
- maturity_payoff(event, w, a) -> P_T at the final event
- death_benefit(event, w, a) -> D_n
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from errors import ContractError, ParameterError
from settings import EARLY_WITHDRAWAL_AGE

logger = logging.getLogger(__name__)

ADMISSIBLE_TOLERANCE = 1e-9
GMAB_ACCOUNTS = ('super', 'pension')
GMWB_VARIANTS = ('basic', 'spec1', 'spec2', 'spec3')
RATCHET_TIMINGS = ('before', 'after', 'none')
DEATH_BENEFIT_TYPES = (0, 1, 2, 3)


def _arrays(*values):
    return np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in values))


def _safe_ratio(numerator, denominator):
    positive = denominator > 0.0
    return np.where(positive, numerator / np.where(positive, denominator, 1.0), 0.0)


def check_admissible(gamma, upper, rider_name="rider"):
    gamma, upper = _arrays(gamma, upper)
    slack = ADMISSIBLE_TOLERANCE * np.maximum(upper, 1.0)
    bad = (gamma < -slack) | (gamma > upper + slack)
    if np.any(bad):
        where = np.argmax(bad)
        raise ContractError(f"{rider_name}: withdrawal {gamma.flat[where]:.6g} outside admissible set "
                            f"[0, {upper.flat[where]:.6g}]")


def penalised_cashflow(gamma, g_n, beta):
    gamma, g_n = _arrays(gamma, g_n)
    return np.where(gamma <= g_n, gamma, g_n + (1.0 - beta) * (gamma - g_n))


def _exceeds(gamma, g_n):
    # Strict excess with a relative guard so gamma = G_n computed two ways is not penalised
    return gamma > g_n * (1.0 + 1e-12) + 1e-300


def gmdb_benefit(benefit_type: int, w, a, w0: float):
    w, a = _arrays(w, a)
    if benefit_type == 0:
        return np.maximum(a, w)
    if benefit_type == 1:
        return np.full_like(w, float(w0))
    if benefit_type == 2:
        return np.maximum(float(w0), w)
    if benefit_type == 3:
        return w.copy()
    raise ParameterError(f"death benefit type must be one of {DEATH_BENEFIT_TYPES}, got {benefit_type}")


def _evolve_base(event, w, a, rollup_rate, ratchet):
    a = a * (1.0 + rollup_rate * event.dt)
    if ratchet and event.ratchet:
        a = np.maximum(a, w)
    return a


class RiderSpec(ABC):
    name = "rider"
    allows_withdrawal = True
    homogeneous = True

    def __init__(self, premium: float = 100.0, death_benefit_type: int = 3):
        if premium <= 0.0:
            raise ParameterError("premium must be positive")
        if death_benefit_type not in DEATH_BENEFIT_TYPES:
            raise ParameterError(f"death benefit type must be one of {DEATH_BENEFIT_TYPES}")
        self.premium = float(premium)
        self.death_benefit_type = death_benefit_type

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"

    def describe(self) -> str:
        return f"premium={self.premium:g}, death_benefit={self.death_benefit_type}"

    def initial_state(self, premium=None):
        premium = self.premium if premium is None else premium
        return premium, premium

    @abstractmethod
    def contractual_amount(self, event, w, a):
        ...

    @abstractmethod
    def admissible_max(self, event, w, a):
        ...

    @abstractmethod
    def transition(self, event, w, a, gamma):
        ...

    @abstractmethod
    def maturity_payoff(self, event, w, a):
        ...

    def death_benefit(self, event, w, a):
        return gmdb_benefit(self.death_benefit_type, w, a, self.premium)


@dataclass(frozen=True)
class GmabConfig:
    account: str = 'super'
    withdrawal_limit: float = 0.15
    ratchet: bool = True

    def __post_init__(self):
        if self.account not in GMAB_ACCOUNTS:
            raise ParameterError(f"GMAB account must be one of {GMAB_ACCOUNTS}, got {self.account!r}")
        if not 0.0 <= self.withdrawal_limit <= 1.0:
            raise ParameterError("GMAB withdrawal limit must lie in [0, 1]")


def gmab_penalty(kind: str, w, a, gamma, g_n):
    w, a, gamma, g_n = _arrays(w, a, gamma, g_n)
    check_admissible(gamma, w, "GMAB")
    penalised = w < a
    if kind == 'pension':
        penalised = penalised & _exceeds(gamma, g_n)
    elif kind != 'super':
        raise ParameterError(f"GMAB account must be one of {GMAB_ACCOUNTS}, got {kind!r}")
    return np.where(penalised, a * _safe_ratio(gamma, w), gamma)


def gmab_jump(config: GmabConfig, event, w, a, gamma):
    w, a, gamma = _arrays(w, a, gamma)
    g_n = config.withdrawal_limit * w * event.dt
    penalty = gmab_penalty(config.account, w, a, gamma, g_n)
    if config.ratchet and event.ratchet:
        a_plus = np.maximum(np.maximum(a, w) - penalty, 0.0)
    else:
        a_plus = np.maximum(a - penalty, 0.0)
    # A complete withdrawal exhausts the protected capital
    surrender = (gamma > 0.0) & (gamma >= w * (1.0 - 1e-12))
    a_plus = np.where(surrender, 0.0, a_plus)
    return np.maximum(w - gamma, 0.0), a_plus


class GmabRider(RiderSpec):
    name = "gmab"

    def __init__(self, config: GmabConfig = GmabConfig(), premium: float = 100.0, death_benefit_type: int = 3):
        super().__init__(premium, death_benefit_type)
        self.config = config

    def describe(self):
        return f"{self.config.account}, g={self.config.withdrawal_limit:g}, ratchet={self.config.ratchet}"

    def contractual_amount(self, event, w, a):
        return self.config.withdrawal_limit * np.asarray(w, dtype=float) * event.dt

    def admissible_max(self, event, w, a):
        return np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(a, dtype=float))[0].copy()

    def transition(self, event, w, a, gamma):
        w_plus, a_plus = gmab_jump(self.config, event, w, a, gamma)
        return w_plus, a_plus, _arrays(gamma, w_plus)[0].copy()

    def maturity_payoff(self, event, w, a):
        w, a = _arrays(w, a)
        return np.maximum(w, a)


@dataclass(frozen=True)
class GmwbConfig:
    variant: str = 'basic'
    penalty: float = 0.1
    excess_penalty: float = 0.0
    early_penalty: float = 0.0
    entry_age: float = 65.0
    ratchet_timing: str = 'none'
    guaranteed_rate: float = None

    def __post_init__(self):
        if self.variant not in GMWB_VARIANTS:
            raise ParameterError(f"GMWB variant must be one of {GMWB_VARIANTS}, got {self.variant!r}")
        if self.ratchet_timing not in RATCHET_TIMINGS:
            raise ParameterError(f"ratchet timing must be one of {RATCHET_TIMINGS}")
        for label in ('penalty', 'excess_penalty', 'early_penalty'):
            if not 0.0 <= getattr(self, label) <= 1.0:
                raise ParameterError(f"GMWB {label} must lie in [0, 1]")
        if self.guaranteed_rate is not None and self.guaranteed_rate < 0.0:
            raise ParameterError("GMWB guaranteed rate must be non-negative")


def gmwb_basic(config: GmwbConfig, event, w, a, gamma, g_n):
    w, a, gamma, g_n = _arrays(w, a, gamma, g_n)
    check_admissible(gamma, a, "GMWB")
    cash = penalised_cashflow(gamma, g_n, config.penalty)
    return np.maximum(w - gamma, 0.0), np.maximum(a - gamma, 0.0), cash


def gmwb_spec_jump(variant: str, w, a, gamma, g_n):
    w, a, gamma, g_n = _arrays(w, a, gamma, g_n)
    w_plus = np.maximum(w - gamma, 0.0)
    within = np.maximum(a - gamma, 0.0)
    if variant == 'spec1':
        excess = np.maximum(np.minimum(a - gamma, a * _safe_ratio(w_plus, w)), 0.0)
    elif variant == 'spec2':
        excess = np.maximum(np.minimum(a - gamma, w_plus), 0.0)
    elif variant == 'spec3':
        # W- <= G_n leaves nothing to scale: the base is exhausted
        excess = np.maximum(a - g_n, 0.0) * _safe_ratio(w_plus, np.maximum(w - g_n, 0.0))
    else:
        raise ParameterError(f"benefit base specification must be spec1, spec2 or spec3, got {variant!r}")
    return np.where(_exceeds(gamma, g_n), excess, within)


def gmwb_industry_cashflow(config: GmwbConfig, event, a, gamma, g_n):
    a, gamma, g_n = _arrays(a, gamma, g_n)
    excess = config.excess_penalty * np.maximum(gamma - np.minimum(a, g_n), 0.0)
    early = config.early_penalty if config.entry_age + event.time < EARLY_WITHDRAWAL_AGE else 0.0
    cash = gamma - excess - early * (gamma - excess)
    negative = cash < 0.0
    if np.any(negative):
        logger.warning("GMWB cashflow negative at event %d for %d states; clamped to zero",
                       event.index, int(np.count_nonzero(negative)))
        cash = np.maximum(cash, 0.0)
    return cash


class GmwbRider(RiderSpec):
    name = "gmwb"

    def __init__(self, config: GmwbConfig = GmwbConfig(), premium: float = 100.0, death_benefit_type: int = 3):
        super().__init__(premium, death_benefit_type)
        self.config = config
        self.homogeneous = config.guaranteed_rate is not None

    def describe(self):
        c = self.config
        return f"{c.variant}, beta={c.penalty:g}, ratchet={c.ratchet_timing}, premium={self.premium:g}"

    def contractual_amount(self, event, w, a):
        w, a = _arrays(w, a)
        if self.config.guaranteed_rate is not None:
            return self.config.guaranteed_rate * a * event.dt
        return np.full_like(w, self.premium * event.dt / event.maturity)

    def _ratchet_before(self, event, w, a):
        if self.config.ratchet_timing == 'before' and event.ratchet:
            return np.maximum(a, w)
        return a

    def admissible_max(self, event, w, a):
        w, a = _arrays(w, a)
        a = self._ratchet_before(event, w, a)
        if self.config.variant == 'basic':
            return a.copy()
        return np.maximum(w, np.minimum(a, self.contractual_amount(event, w, a)))

    def transition(self, event, w, a, gamma):
        w, a, gamma = _arrays(w, a, gamma)
        a = self._ratchet_before(event, w, a)
        g_n = self.contractual_amount(event, w, a)
        if self.config.variant == 'basic':
            w_plus, a_plus, cash = gmwb_basic(self.config, event, w, a, gamma, g_n)
        else:
            check_admissible(gamma, np.maximum(w, np.minimum(a, g_n)), "GMWB")
            w_plus = np.maximum(w - gamma, 0.0)
            a_plus = gmwb_spec_jump(self.config.variant, w, a, gamma, g_n)
            cash = gmwb_industry_cashflow(self.config, event, a, gamma, g_n)
        if self.config.ratchet_timing == 'after' and event.ratchet:
            a_plus = np.maximum(a_plus, w_plus)
        return w_plus, a_plus, cash

    def maturity_payoff(self, event, w, a):
        w, a = _arrays(w, a)
        g_n = self.contractual_amount(event, w, a)
        if self.config.variant == 'basic':
            return np.maximum(w, penalised_cashflow(a, g_n, self.config.penalty))
        return np.maximum(w, np.minimum(a, g_n))


@dataclass(frozen=True)
class GlwbConfig:
    """GLWB terms. withdrawal_rate and bonus_rate are annual: event n guarantees G_n = rate * A * dt and, with no
    withdrawal, credits the bonus b_n = bonus_rate * dt. bonus_schedule gives b_1, b_2, ... per event instead."""
    withdrawal_rate: float = 0.05
    bonus_rate: float = 0.0
    penalty: float = 0.1
    ratchet: bool = True
    bonus_schedule: tuple = None

    def __post_init__(self):
        if self.withdrawal_rate < 0.0 or self.bonus_rate < 0.0:
            raise ParameterError("GLWB rates must be non-negative")
        if not 0.0 <= self.penalty <= 1.0:
            raise ParameterError("GLWB penalty must lie in [0, 1]")
        if self.bonus_schedule is not None:
            schedule = tuple(float(b) for b in self.bonus_schedule)
            if any(b < 0.0 for b in schedule):
                raise ParameterError("GLWB bonus schedule must be non-negative")
            object.__setattr__(self, 'bonus_schedule', schedule)

    def bonus(self, event) -> float:
        if self.bonus_schedule is None:
            return self.bonus_rate * event.dt
        if not 1 <= event.index <= len(self.bonus_schedule):
            raise ParameterError(f"GLWB bonus schedule has {len(self.bonus_schedule)} entries, event {event.index} "
                                 "needs one")
        return self.bonus_schedule[event.index - 1]


def glwb_jump(config: GlwbConfig, event, w, a, gamma):
    w, a, gamma = _arrays(w, a, gamma)
    g_n = config.withdrawal_rate * a * event.dt
    check_admissible(gamma, np.maximum(w, g_n), "GLWB")
    ratchet = config.ratchet and event.ratchet
    remaining = np.maximum(w - gamma, 0.0)
    ratchet_to = remaining if ratchet else 0.0
    no_withdrawal = np.maximum(a * (1.0 + config.bonus(event)), w if ratchet else 0.0)
    contractual = np.maximum(a, ratchet_to)
    excess = np.maximum(a * _safe_ratio(w - gamma, w - g_n), ratchet_to)
    a_plus = np.where(gamma <= 0.0, no_withdrawal, np.where(gamma <= g_n, contractual, excess))
    cash = penalised_cashflow(gamma, g_n, config.penalty)
    return remaining, np.maximum(a_plus, 0.0), cash


class GlwbRider(RiderSpec):
    name = "glwb"

    def __init__(self, config: GlwbConfig = GlwbConfig(), premium: float = 100.0, death_benefit_type: int = 3):
        super().__init__(premium, death_benefit_type)
        self.config = config

    def describe(self):
        c = self.config
        return f"g={c.withdrawal_rate:g}, bonus={c.bonus_rate:g}, beta={c.penalty:g}, ratchet={c.ratchet}"

    def contractual_amount(self, event, w, a):
        w, a = _arrays(w, a)
        return self.config.withdrawal_rate * a * event.dt

    def admissible_max(self, event, w, a):
        w, a = _arrays(w, a)
        return np.maximum(w, self.contractual_amount(event, w, a))

    def transition(self, event, w, a, gamma):
        return glwb_jump(self.config, event, w, a, gamma)

    def maturity_payoff(self, event, w, a):
        w, a = _arrays(w, a)
        return w.copy()


@dataclass(frozen=True)
class GmibConfig:
    annuity_ratio: float = 1.0
    rollup_rate: float = 0.0
    ratchet: bool = False

    def __post_init__(self):
        if self.annuity_ratio <= 0.0:
            raise ParameterError("GMIB annuity ratio must be positive")
        if self.rollup_rate < 0.0:
            raise ParameterError("GMIB roll-up rate must be non-negative")


def gmib_payoff(config: GmibConfig, w, a):
    w, a = _arrays(w, a)
    return np.maximum(w, a * config.annuity_ratio)


class _NoWithdrawalRider(RiderSpec):
    allows_withdrawal = False

    def contractual_amount(self, event, w, a):
        w, a = _arrays(w, a)
        return np.zeros_like(w)

    def admissible_max(self, event, w, a):
        w, a = _arrays(w, a)
        return np.zeros_like(w)

    def transition(self, event, w, a, gamma):
        w, a, gamma = _arrays(w, a, gamma)
        check_admissible(gamma, np.zeros_like(w), self.name.upper())
        a_plus = _evolve_base(event, w, a, self.config.rollup_rate, self.config.ratchet)
        return w.copy(), a_plus, np.zeros_like(w)


class GmibRider(_NoWithdrawalRider):
    name = "gmib"

    def __init__(self, config: GmibConfig = GmibConfig(), premium: float = 100.0, death_benefit_type: int = 3):
        super().__init__(premium, death_benefit_type)
        self.config = config

    def describe(self):
        c = self.config
        return f"ratio={c.annuity_ratio:g}, rollup={c.rollup_rate:g}, ratchet={c.ratchet}"

    def maturity_payoff(self, event, w, a):
        return gmib_payoff(self.config, w, a)


@dataclass(frozen=True)
class GmdbConfig:
    benefit_type: int = 0
    rollup_rate: float = 0.0
    ratchet: bool = False

    def __post_init__(self):
        if self.benefit_type not in DEATH_BENEFIT_TYPES:
            raise ParameterError(f"GMDB type must be one of {DEATH_BENEFIT_TYPES}, got {self.benefit_type}")
        if self.rollup_rate < 0.0:
            raise ParameterError("GMDB roll-up rate must be non-negative")


class GmdbRider(_NoWithdrawalRider):
    name = "gmdb"

    def __init__(self, config: GmdbConfig = GmdbConfig(), premium: float = 100.0):
        super().__init__(premium, config.benefit_type)
        self.config = config
        self.homogeneous = config.benefit_type in (0, 3)

    def describe(self):
        c = self.config
        return f"type={c.benefit_type}, rollup={c.rollup_rate:g}, ratchet={c.ratchet}, premium={self.premium:g}"

    def maturity_payoff(self, event, w, a):
        w, a = _arrays(w, a)
        return w.copy()


RIDER_TYPES = {
    'gmab': (GmabRider, GmabConfig),
    'gmwb': (GmwbRider, GmwbConfig),
    'glwb': (GlwbRider, GlwbConfig),
    'gmib': (GmibRider, GmibConfig),
    'gmdb': (GmdbRider, GmdbConfig),
}
