"""
analysis.py

Everything RiderQuad computes on top of a single price: the solver dispatcher, the fair-fee root search, Greeks and
hedge units, plus the closed-form Black-Scholes oracle used by the validator.

Classes:
- SolverSettings: method ('ghqc', 'ghqc-psi', 'fd' or 'mc') with grid, integration, time-stepping and path settings.
- PricingBundle: rider, market, fee, mortality, strategy, solver settings and the initial state (W(0), A(0)).
- FairFeeRequest: bundle plus fee bracket, tolerance and bracket expansion limit (all in basis points).

Functions:
- solve(bundle, lattice=None, greeks=False, keep_history=False): price with the bundle's solver.
- fair_fee(request): annual fee rate with Q_0 = W(0). The lattice is built once and reused for every trial fee,
  trial prices are memoized by fee, and the upper end of the bracket doubles up to the limit when the guarantee
  is still worth more than the premium.
- delta_gamma_likelihood(bundle): Delta and Gamma from likelihood weights on the first-period density.
- greeks_bump(bundle, ...): central differences in W(0), the rate curve and the volatility curve.
- hedge_units(delta_w, w, s): units of the tradable asset that hedge the guarantee.
- black_scholes_put(...), gmab_closed_form(...): European put and the static no-ratchet GMAB value.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from errors import BracketError, ParameterError, UnsupportedStrategyError
from ghqc_solver import default_lattice, price, price_mortality_averaged
from lattice import Lattice, StrategySpec
from mc_solver import McConfig, price_mc
from model import FeeStructure, MortalityModel, continuous_equivalent_fee
from numerics import find_root, gauss_hermite
from pde_solver import FdScheme, price_pde
from results import FairFeeResult, GreeksReport
from settings import (DEFAULT_FD_THETA, DEFAULT_FD_TIME_STEPS, DEFAULT_FEE_TOLERANCE_BP, DEFAULT_INTEGRATION,
                      DEFAULT_MC_BATCH, DEFAULT_MC_PATHS, DEFAULT_QUADRATURE_ORDER, DEFAULT_RANNACHER_STEPS,
                      DEFAULT_RATE_BUMP, DEFAULT_SEED, DEFAULT_VOL_BUMP, DEFAULT_WEALTH_BUMP, FEE_BRACKET_BP,
                      FEE_BRACKET_LIMIT_BP, INTEGRATION_MODES)

logger = logging.getLogger(__name__)

METHODS = ('ghqc', 'ghqc-psi', 'fd', 'mc')


@dataclass(frozen=True)
class SolverSettings:
    method: str = 'ghqc'
    wealth_nodes: int = None
    base_nodes: int = None
    integration: str = DEFAULT_INTEGRATION
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER
    time_steps: int = DEFAULT_FD_TIME_STEPS
    theta: float = DEFAULT_FD_THETA
    rannacher_steps: int = DEFAULT_RANNACHER_STEPS
    paths: int = DEFAULT_MC_PATHS
    seed: int = DEFAULT_SEED
    antithetic: bool = True
    batch_size: int = DEFAULT_MC_BATCH

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"solver method must be one of {METHODS}, got {self.method!r}")
        if self.integration not in INTEGRATION_MODES:
            raise ParameterError(f"integration must be one of {INTEGRATION_MODES}, got {self.integration!r}")

    def scheme(self) -> FdScheme:
        return FdScheme(self.time_steps, self.theta, self.rannacher_steps)

    def mc_config(self) -> McConfig:
        return McConfig(self.paths, self.seed, self.antithetic, self.batch_size)


@dataclass
class PricingBundle:
    rider: object
    model: object
    fee: FeeStructure = field(default_factory=FeeStructure)
    mortality: MortalityModel = None
    strategy: StrategySpec = field(default_factory=StrategySpec)
    solver: SolverSettings = field(default_factory=SolverSettings)
    w0: float = None
    a0: float = None

    def __post_init__(self):
        if self.mortality is None:
            self.mortality = MortalityModel.none(self.model.N)
        if self.w0 is None:
            self.w0 = self.rider.premium
        if self.a0 is None:
            self.a0 = self.w0
        if self.w0 <= 0.0 or self.a0 < 0.0:
            raise ParameterError(f"initial state must have W(0) > 0 and A(0) >= 0, got ({self.w0}, {self.a0})")

    def with_fee_rate(self, rate: float) -> "PricingBundle":
        return replace(self, fee=self.fee.with_rate(rate))

    def with_model(self, model) -> "PricingBundle":
        return replace(self, model=model)

    def with_state(self, w0: float, a0: float = None) -> "PricingBundle":
        return replace(self, w0=w0, a0=self.a0 if a0 is None else a0)

    def with_method(self, method: str) -> "PricingBundle":
        return replace(self, solver=replace(self.solver, method=method))


def build_lattice(bundle: PricingBundle) -> Lattice:
    solver = bundle.solver
    return default_lattice(bundle.model, bundle.strategy, bundle.w0, bundle.a0, solver.wealth_nodes, solver.base_nodes)


def quadrature_rule(solver: SolverSettings):
    """None selects exact integration of the continuation."""
    return gauss_hermite(solver.quadrature_order) if solver.integration == 'quadrature' else None


def solve(bundle: PricingBundle, lattice=None, greeks=False, keep_history=False):
    b, solver = bundle, bundle.solver
    if solver.method == 'mc':
        return price_mc(b.rider, b.model, b.fee, b.mortality, b.strategy, solver.mc_config(), b.w0, b.a0)
    lattice = lattice or build_lattice(bundle)
    if solver.method == 'fd':
        return price_pde(b.rider, b.model, b.fee, b.mortality, b.strategy, solver.scheme(), b.w0, b.a0, lattice,
                         keep_history=keep_history)
    pricer = price_mortality_averaged if solver.method == 'ghqc-psi' else price
    return pricer(b.rider, b.model, b.fee, b.mortality, b.strategy, lattice, quadrature_rule(solver),
                  b.w0, b.a0, greeks, keep_history)


@dataclass(frozen=True)
class FairFeeRequest:
    bundle: PricingBundle
    bracket_bp: tuple = FEE_BRACKET_BP
    tolerance_bp: float = DEFAULT_FEE_TOLERANCE_BP
    limit_bp: float = FEE_BRACKET_LIMIT_BP

    def __post_init__(self):
        lo, hi = self.bracket_bp
        if not 0.0 <= lo < hi:
            raise ParameterError(f"fee bracket must satisfy 0 <= lo < hi, got {self.bracket_bp}")
        if self.tolerance_bp <= 0.0:
            raise ParameterError("fee tolerance must be positive")


def fair_fee(request: FairFeeRequest) -> FairFeeResult:
    bundle = request.bundle
    premium = bundle.w0
    lattice = None if bundle.solver.method == 'mc' else build_lattice(bundle)
    values = {}
    evaluations = []

    def excess(bp):
        if bp not in values:
            values[bp] = solve(bundle.with_fee_rate(bp * 1e-4), lattice).value
            evaluations.append((bp, values[bp]))
            logger.debug("fee %.4f bp: Q0 - W0 = %.6g", bp, values[bp] - premium)
        return values[bp] - premium

    lo, hi = request.bracket_bp
    f_lo = excess(lo)
    if abs(f_lo) <= 1e-9 * premium:
        return _fee_result(bundle, lo, evaluations, values[lo], (lo, hi))
    if f_lo < 0.0:
        raise BracketError(f"contract is worth less than the premium at {lo:g} bp: the guarantee is worthless",
                           lo, hi, f_lo, None)
    f_hi = excess(hi)
    while f_hi > 0.0:
        if hi >= request.limit_bp:
            raise BracketError(f"contract still worth more than the premium at {hi:g} bp", lo, hi, f_lo, f_hi)
        hi = min(2.0 * hi, request.limit_bp)
        logger.warning("fee bracket expanded to %g bp", hi)
        f_hi = excess(hi)
    root = find_root(excess, lo, hi, tol=request.tolerance_bp)
    return _fee_result(bundle, root, evaluations, excess(root) + premium, (lo, hi))


def _fee_result(bundle, bp, evaluations, value, bracket) -> FairFeeResult:
    rate = bp * 1e-4
    equivalent = None
    if bundle.fee.kind == 'discrete_wealth':
        equivalent = continuous_equivalent_fee(rate, bundle.model.dt(1))
    logger.info("fair fee %.4f bp (%s, %s) after %d prices", bp, bundle.solver.method, bundle.fee.kind,
                len(evaluations))
    return FairFeeResult(rate=rate, method=bundle.solver.method, fee_kind=bundle.fee.kind,
                         iterations=len(evaluations), value_at_root=value, bracket_bp=bracket,
                         continuous_equivalent=equivalent, evaluations=list(evaluations))


def delta_gamma_likelihood(bundle: PricingBundle, lattice=None):
    """(Q_0, Delta, Gamma) of the whole contract from the first-period likelihood weights."""
    if bundle.solver.method not in ('ghqc', 'ghqc-psi'):
        bundle = bundle.with_method('ghqc')
    result = solve(bundle, lattice, greeks=True)
    return result.value, result.delta, result.gamma


def greeks_bump(bundle: PricingBundle, wealth_bump=DEFAULT_WEALTH_BUMP, rate_bump=DEFAULT_RATE_BUMP,
                vol_bump=DEFAULT_VOL_BUMP, lattice=None) -> GreeksReport:
    """Central differences of Q_0 with A(0) held fixed; wealth_bump is relative to W(0)."""
    if min(wealth_bump, rate_bump, vol_bump) <= 0.0:
        raise ParameterError("bump sizes must be positive")
    if bundle.solver.method != 'mc':
        lattice = lattice or build_lattice(bundle)
    h = wealth_bump * bundle.w0

    def value(b):
        return solve(b, lattice).value

    mid = value(bundle)
    up = value(bundle.with_state(bundle.w0 + h))
    down = value(bundle.with_state(bundle.w0 - h))
    rho = (value(bundle.with_model(bundle.model.bumped(rate_shift=rate_bump)))
           - value(bundle.with_model(bundle.model.bumped(rate_shift=-rate_bump)))) / (2.0 * rate_bump)
    vega = (value(bundle.with_model(bundle.model.bumped(vol_shift=vol_bump)))
            - value(bundle.with_model(bundle.model.bumped(vol_shift=-vol_bump)))) / (2.0 * vol_bump)
    return GreeksReport(value=mid, delta=(up - down) / (2.0 * h), gamma=(up - 2.0 * mid + down) / (h * h),
                        method=f"bump-{bundle.solver.method}", rho=rho, vega=vega)


def likelihood_report(bundle: PricingBundle, lattice=None) -> GreeksReport:
    value, delta, gamma = delta_gamma_likelihood(bundle, lattice)
    return GreeksReport(value=value, delta=delta, gamma=gamma, method='likelihood')


def hedge_units(delta_w: float, w: float, s: float) -> float:
    """Units of the asset S hedging the guarantee, given dQ/dW."""
    if s <= 0.0:
        raise ParameterError("asset price must be positive")
    return (delta_w - 1.0) * w / s


def black_scholes_put(spot, strike, rate, volatility, maturity, dividend_yield=0.0):
    if volatility <= 0.0 or maturity <= 0.0:
        forward = spot * math.exp(-dividend_yield * maturity)
        return max(strike * math.exp(-rate * maturity) - forward, 0.0)
    vol_sqrt_t = volatility * math.sqrt(maturity)
    d1 = (math.log(spot / strike) + (rate - dividend_yield + 0.5 * volatility ** 2) * maturity) / vol_sqrt_t
    d2 = d1 - vol_sqrt_t
    return (strike * math.exp(-rate * maturity) * norm.cdf(-d2)
            - spot * math.exp(-dividend_yield * maturity) * norm.cdf(-d1))


def gmab_closed_form(w0, a0, rate, volatility, maturity, fee_rate):
    """Static GMAB without ratchet, withdrawals or mortality: W0 e^{-alpha T} + put with yield alpha."""
    return w0 * math.exp(-fee_rate * maturity) + black_scholes_put(w0, a0, rate, volatility, maturity, fee_rate)


def closed_form_applies(bundle: PricingBundle) -> bool:
    b = bundle
    rates, vols = np.asarray(b.model.rates), np.asarray(b.model.volatilities)
    return (b.rider.name == 'gmab' and not (b.rider.config.ratchet and b.model.ratchet_indices)
            and b.strategy.is_static and b.strategy.rule == 'none' and b.mortality.is_trivial
            and b.fee.kind == 'continuous' and np.all(rates == rates[0]) and np.all(vols == vols[0]))


def closed_form_value(bundle: PricingBundle) -> float:
    if not closed_form_applies(bundle):
        raise UnsupportedStrategyError("closed form covers the static no-ratchet GMAB without mortality only")
    m = bundle.model
    return gmab_closed_form(bundle.w0, bundle.a0, float(m.rates[0]), float(m.volatilities[0]), m.maturity,
                            bundle.fee.rate)
