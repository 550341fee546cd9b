"""
mc_solver.py

Forward Monte Carlo pricer for static withdrawal rules. Paths of the wealth account are simulated event by event
from the exact lognormal transition; the benefit base and cashflows follow the rider's jump map with the withdrawal
fixed by the static rule. Death is not simulated: each path pays the survival-weighted cashflows and the
death-weighted death benefits, so the estimator has no mortality noise.

    payoff = sum_{n<N} B(0, n) (p_n C_n + p_{n-1} q_n D_n) + B(0, N) (p_N P_T + p_{N-1} q_N D_N)

Paths run in batches. Batch k draws from its own generator spawned from SeedSequence(seed), so estimates depend
only on (seed, paths, batch_size, antithetic). Antithetic pairs are averaged into one sample before the batch
moments are merged into the running mean and variance.
"""
import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from errors import NumericalError, ParameterError, UnsupportedStrategyError
from model import discount, wealth_step
from results import PricingResult
from settings import DEFAULT_MC_BATCH, DEFAULT_MC_PATHS, DEFAULT_SEED

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class McConfig:
    paths: int = DEFAULT_MC_PATHS
    seed: int = DEFAULT_SEED
    antithetic: bool = True
    batch_size: int = DEFAULT_MC_BATCH

    def __post_init__(self):
        if self.paths < 1:
            raise ParameterError("at least one Monte Carlo path is required")
        if self.batch_size < 2:
            raise ParameterError("Monte Carlo batch size must be at least 2")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")

    def batch_sizes(self):
        full, rest = divmod(self.paths, self.batch_size)
        return [self.batch_size] * full + ([rest] if rest else [])


@dataclass
class RunningMoments:
    """Mean and sum of squared deviations merged batch by batch."""
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def merge(self, samples):
        n = samples.size
        if n == 0:
            return
        batch_mean = float(np.mean(samples))
        batch_m2 = float(np.sum((samples - batch_mean) ** 2))
        total = self.count + n
        delta = batch_mean - self.mean
        self.mean += delta * n / total
        self.m2 += batch_m2 + delta * delta * self.count * n / total
        self.count = total

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else float('nan')


def simulate_payoffs(rider, model, fee, mortality, strategy, z, w0, a0):
    """Discounted survival-weighted payoff for each column of the normal draws z (N, paths)."""
    n_paths = z.shape[1]
    w = np.full(n_paths, w0)
    a = np.full(n_paths, a0)
    total = np.zeros(n_paths)
    for n in range(1, model.N + 1):
        event = model.event(n)
        w_minus = wealth_step(model, fee, n, w, z[n - 1])
        settled = fee.deduct(event.dt, w_minus, a)
        death = mortality.p(n - 1) * mortality.q(n) * rider.death_benefit(event, w_minus, a)
        if n < model.N:
            gamma = strategy.static_withdrawal(rider, event, settled, a)
            w, a, cash = rider.transition(event, settled, a, gamma)
            flow = mortality.p(n) * cash + death
        else:
            flow = mortality.p(n) * rider.maturity_payoff(event, settled, a) + death
        total += discount(model, 0, n) * flow
    return total


def _batch_samples(rider, model, fee, mortality, strategy, config, rng, size, w0, a0):
    if not config.antithetic:
        z = rng.standard_normal((model.N, size))
        return simulate_payoffs(rider, model, fee, mortality, strategy, z, w0, a0)
    pairs, lone = divmod(size, 2)
    z = rng.standard_normal((model.N, pairs + lone))
    paths = np.concatenate((z[:, :pairs], -z[:, :pairs], z[:, pairs:]), axis=1)
    payoffs = simulate_payoffs(rider, model, fee, mortality, strategy, paths, w0, a0)
    # An odd batch keeps its unpaired path as a sample of its own
    return np.concatenate((0.5 * (payoffs[:pairs] + payoffs[pairs:2 * pairs]), payoffs[2 * pairs:]))


def price_mc(rider, model, fee, mortality, strategy, config=None, w0=None, a0=None) -> PricingResult:
    if not strategy.is_static and rider.allows_withdrawal:
        raise UnsupportedStrategyError(
            f"Monte Carlo prices pre-determined withdrawals only; {strategy.describe()} needs a backward solver")
    if mortality.N != model.N:
        raise ParameterError(f"mortality covers {mortality.N} periods but the model has {model.N}")
    started = time.perf_counter()
    config = config or McConfig()
    w0 = rider.premium if w0 is None else float(w0)
    a0 = w0 if a0 is None else float(a0)

    sizes = config.batch_sizes()
    streams = np.random.SeedSequence(config.seed).spawn(len(sizes))
    moments = RunningMoments()
    for k, (size, stream) in enumerate(zip(sizes, streams)):
        samples = _batch_samples(rider, model, fee, mortality, strategy, config, np.random.default_rng(stream),
                                 size, w0, a0)
        if not np.all(np.isfinite(samples)):
            raise NumericalError("non-finite Monte Carlo payoffs", {'batch': k, 'seed': config.seed})
        moments.merge(samples)
        logger.debug("batch %d/%d: running mean %.6f (se %.3g)", k + 1, len(sizes), moments.mean,
                     moments.standard_error)

    runtime = time.perf_counter() - started
    logger.info("mc price %.6f +/- %.2g (fee %.2f bp %s, %d paths) in %.2fs", moments.mean,
                moments.standard_error, fee.rate_bp, fee.kind, config.paths, runtime)
    diagnostics = {'paths': config.paths, 'samples': moments.count, 'batches': len(sizes), 'seed': config.seed,
                   'antithetic': config.antithetic, 'runtime': runtime}
    return PricingResult(value=moments.mean, method='mc', premium=w0, fee_kind=fee.kind, fee_rate=fee.rate,
                         standard_error=moments.standard_error, diagnostics=diagnostics)
