"""
pde_solver.py

Finite-difference validator for the quadrature pricer. Between events each benefit-base row solves the
one-dimensional Black-Scholes equation

    dQ/dtau = (sigma^2 / 2) Q_xx + (r - alpha - sigma^2 / 2) Q_x - r Q,    x = ln W

on the lattice's uniform ln W nodes with a theta-scheme (Crank-Nicolson at theta = 1/2). Every interval starts with
a few fully implicit Rannacher steps so the kinks left by the jump condition do not ring.

Boundaries:
- W_0: the zero-wealth state only discounts, dQ/dtau = -r Q.
- W_M: Q is linear in W, which leaves (r - alpha) Q_x - r Q with a one-sided Q_x.

Terminal condition, jump condition, mortality mixing and the induction loop are shared with ghqc_solver; the last
interval is stepped all the way to t_0 and the value read off the surface at (W(0), A(0)).
"""
import logging
import time
from dataclasses import dataclass

import numpy as np

from errors import ParameterError
from ghqc_solver import backward_induction, default_lattice, expected_next
from lattice import ValueSurface
from numerics import tridiag_solve
from results import PricingResult
from settings import DEFAULT_FD_THETA, DEFAULT_FD_TIME_STEPS, DEFAULT_RANNACHER_STEPS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FdScheme:
    time_steps: int = DEFAULT_FD_TIME_STEPS
    theta: float = DEFAULT_FD_THETA
    rannacher: int = DEFAULT_RANNACHER_STEPS

    def __post_init__(self):
        if int(self.time_steps) != self.time_steps or self.time_steps < 1:
            raise ParameterError("at least one time step per event interval is required")
        if not 0.5 <= self.theta <= 1.0:
            raise ParameterError(f"theta must lie in [0.5, 1], got {self.theta}")
        if self.rannacher < 0:
            raise ParameterError("Rannacher step count must be non-negative")


def space_operator(model, fee, period: int, h: float, size: int):
    """Tridiagonal (sub, diag, sup) of the spatial operator for one period."""
    sigma = model.volatility(period)
    r = model.rate(period)
    growth = r - fee.drift_rate
    diffusion = 0.5 * sigma * sigma
    convection = growth - diffusion
    lower = diffusion / (h * h) - convection / (2.0 * h)
    upper = diffusion / (h * h) + convection / (2.0 * h)

    sub = np.full(size - 1, lower)
    diag = np.full(size, -2.0 * diffusion / (h * h) - r)
    sup = np.full(size - 1, upper)
    diag[0], sup[0] = -r, 0.0
    sub[-1] = -growth / h
    diag[-1] = growth / h - r
    return sub, diag, sup


def _apply(sub, diag, sup, values):
    # values has nodes along axis 0
    out = diag[:, None] * values
    out[1:] += sub[:, None] * values[:-1]
    out[:-1] += sup[:, None] * values[1:]
    return out


def _theta_step(operator, values, dtau, theta):
    sub, diag, sup = operator
    explicit = values if theta == 1.0 else values + dtau * (1.0 - theta) * _apply(sub, diag, sup, values)
    return tridiag_solve(-dtau * theta * sub, 1.0 - dtau * theta * diag, -dtau * theta * sup, explicit)


def pde_step_interval(surface_pre_next, scheme, model, fee, n, lattice, rider, mortality, averaged=False):
    """Solve backward from t_{n+1}^- to t_n^+ on every benefit-base row."""
    period = n + 1
    values = expected_next(surface_pre_next, rider, model, mortality, n, lattice, averaged, discounted=False).T
    values = np.array(np.broadcast_to(values, (lattice.M + 1, lattice.J)))
    operator = space_operator(model, fee, period, lattice.h_wealth, lattice.M + 1)
    dtau = model.dt(period) / scheme.time_steps
    for k in range(scheme.time_steps):
        theta = 1.0 if k < scheme.rannacher else scheme.theta
        values = _theta_step(operator, values, dtau, theta)
    return ValueSurface.checked(values.T, n, 'post')


def price_pde(rider, model, fee, mortality, strategy, scheme=None, w0=None, a0=None, lattice=None,
              averaged=False, keep_history=False) -> PricingResult:
    started = time.perf_counter()
    scheme = scheme or FdScheme()
    w0 = rider.premium if w0 is None else float(w0)
    a0 = w0 if a0 is None else float(a0)
    lattice = lattice or default_lattice(model, strategy, w0, a0)

    def step(pre, n):
        return pde_step_interval(pre, scheme, model, fee, n, lattice, rider, mortality, averaged)

    pre_1, history = backward_induction(rider, model, fee, mortality, strategy, lattice, step, averaged,
                                        keep_history)
    post_0 = step(pre_1, 0)
    value = lattice.point_value(post_0.values, w0, a0)
    runtime = time.perf_counter() - started
    logger.info("fd price %.6f (fee %.2f bp %s, %s, %d steps/interval) in %.2fs", value, fee.rate_bp, fee.kind,
                strategy.describe(), scheme.time_steps, runtime)
    diagnostics = {'M': lattice.M, 'J': lattice.J, 'time_steps': scheme.time_steps, 'theta': scheme.theta,
                   'rannacher': scheme.rannacher, 'runtime': runtime}
    return PricingResult(value=value, method='fd', premium=w0, fee_kind=fee.kind, fee_rate=fee.rate,
                         diagnostics=diagnostics, history=history)
