"""
ghqc_solver.py

Backward induction on the (W, A) lattice integrating cubic-spline interpolated value slices against the lognormal
wealth step (GHQC). This is the primary RiderQuad pricer; the finite-difference solver reuses its terminal condition,
jump step and induction loop and only swaps the continuation operator.

Algorithm:
1. Build the lattice (log-uniform W nodes, a zero-base row plus log-uniform A rows on wealth nodes).
2. Terminal condition at t_N^-: maturity payoff after any discrete fee.
3. Continuation t_{n+1}^- -> t_n^+: for each A row the discounted mixture
   B((1 - q_{n+1}) Q(t_{n+1}^-) + q_{n+1} D_{n+1}) is splined in ln W (natural cubic, restarted at the row's W = A
   node, linear in W above W_M, clamped below W_0). Each cubic piece and both tails are integrated exactly against
   the lognormal transition; a Gauss-Hermite rule of order q can be asked for instead.
4. Jump t_n^+ -> t_n^-: for every node score cashflow + Q(t_n^+)(W+, A+) over the withdrawal candidates using a
   bi-cubic spline in (ln W, ln A) and keep the maximum (or the static / threshold choice).
5. Repeat down to t_1, then integrate once more at the single point (W(0), A(0)). Delta and Gamma come out of the
   same integral with the likelihood weights of the first-period lognormal density.

The mortality-averaged variant carries Psi = p_n Q + p_{n-1} q_n D through the same steps: survival-weighted
cashflows, death benefits added at each event and no mortality mixing in the continuation.

Functions:
- continuation(surface_pre_next, model, fee, mortality, n, lattice, quadrature, rider, averaged=False)
- apply_jump_optimize(surface_post, rider, strategy, n, lattice, model, fee, mortality=None, averaged=False)
- backward_induction(...): terminal condition plus alternating continuation/jump steps down to t_1^-.
- price(...), price_mortality_averaged(...)
"""
import logging
import time

import numpy as np

from errors import ParameterError, UnsupportedModelError
from lattice import Lattice, ValueSurface
from model import discount, log_step_moments, wealth_step
from results import PricingResult
from settings import (DEFAULT_BASE_NODES, DEFAULT_BASE_NODES_WITHDRAWAL, DEFAULT_WEALTH_NODES,
                      DEFAULT_WEALTH_NODES_WITHDRAWAL, JUMP_CHUNK_POINTS)

logger = logging.getLogger(__name__)


def default_lattice(model, strategy, w0, a0, wealth_nodes=None, base_nodes=None):
    """Lattice with M = wealth_nodes intervals and J = base_nodes rows, sized by the strategy when not given."""
    if wealth_nodes is None:
        wealth_nodes = DEFAULT_WEALTH_NODES if strategy.is_static else DEFAULT_WEALTH_NODES_WITHDRAWAL
    if base_nodes is None:
        base_nodes = DEFAULT_BASE_NODES if strategy.is_static else DEFAULT_BASE_NODES_WITHDRAWAL
    return Lattice.build(model, w0, a0, wealth_nodes + 1, base_nodes)


def terminal_surface(rider, model, fee, mortality, lattice, averaged=False) -> ValueSurface:
    n = model.N
    event = model.event(n)
    w, a = np.broadcast_arrays(*lattice.mesh())
    settled = fee.deduct(event.dt, w, a)
    payoff = rider.maturity_payoff(event, settled, a)
    if averaged:
        payoff = mortality.p(n) * payoff + mortality.p(n - 1) * mortality.q(n) * rider.death_benefit(event, w, a)
    return ValueSurface.checked(payoff, n, 'pre')


def expected_next(surface_pre_next, rider, model, mortality, n, lattice, averaged=False, discounted=True):
    """Value just before event n + 1, discounted to t_n unless told otherwise and mixed over death when not averaged."""
    values = surface_pre_next.values
    b = discount(model, n, n + 1) if discounted else 1.0
    q = mortality.q(n + 1)
    if averaged or q == 0.0:
        return b * values
    w, a = lattice.mesh()
    death = rider.death_benefit(model.event(n + 1), w, a)
    return b * ((1.0 - q) * values + q * death)


def continuation(surface_pre_next, model, fee, mortality, n, lattice, quadrature, rider, averaged=False):
    """Q(t_n^+) on every node; quadrature=None integrates the spline exactly against the lognormal step."""
    tilde = expected_next(surface_pre_next, rider, model, mortality, n, lattice, averaged)
    spline = lattice.wealth_spline(tilde)
    if quadrature is None:
        post = spline.expect_lognormal(*log_step_moments(model, fee, n + 1))
    else:
        points = wealth_step(model, fee, n + 1, lattice.wealth[:, None], quadrature.normal_points)
        post = np.tensordot(spline(points), quadrature.normal_weights, axes=([1], [0])).T
    return ValueSurface.checked(post, n, 'post')


def _score(rider, event, interpolate, w, a, gamma, cash_weight):
    w_plus, a_plus, cash = rider.transition(event, w, a, gamma)
    return cash_weight * cash + interpolate(w_plus, a_plus)


def apply_jump_optimize(surface_post, rider, strategy, n, lattice, model, fee, mortality=None, averaged=False):
    event = model.event(n)
    w, a = np.broadcast_arrays(*lattice.mesh())
    settled = fee.deduct(event.dt, w, a)
    interpolate = lattice.interpolator(surface_post)
    cash_weight = mortality.p(n) if averaged else 1.0

    if strategy.is_static or not rider.allows_withdrawal:
        controls = strategy.static_withdrawal(rider, event, settled, a)
        values = _score(rider, event, interpolate, settled, a, controls, cash_weight)
    else:
        values = np.empty(lattice.shape)
        controls = np.empty(lattice.shape)
        per_row = (lattice.M + 1) * (strategy.candidates + 1)
        rows_per_chunk = max(1, JUMP_CHUNK_POINTS // per_row)
        for start in range(0, lattice.J, rows_per_chunk):
            rows = slice(start, start + rows_per_chunk)
            w_rows, a_rows = settled[rows], a[rows]
            gammas = strategy.candidate_withdrawals(rider, event, w_rows, a_rows)
            scores = _score(rider, event, interpolate, w_rows[..., None], a_rows[..., None], gammas, cash_weight)
            # Candidates are sorted, so argmax keeps the smallest maximising withdrawal
            best_index = np.argmax(scores, axis=-1)[..., None]
            best = np.take_along_axis(scores, best_index, axis=-1)[..., 0]
            best_gamma = np.take_along_axis(gammas, best_index, axis=-1)[..., 0]
            if strategy.kind == 'threshold':
                default_gamma = strategy.static_withdrawal(rider, event, w_rows, a_rows)
                default = _score(rider, event, interpolate, w_rows, a_rows, default_gamma, cash_weight)
                margin = strategy.theta * cash_weight * rider.contractual_amount(event, w_rows, a_rows)
                deviate = best - default > margin
                best = np.where(deviate, best, default)
                best_gamma = np.where(deviate, best_gamma, default_gamma)
            values[rows] = best
            controls[rows] = best_gamma
    if averaged:
        values = values + mortality.p(n - 1) * mortality.q(n) * rider.death_benefit(event, w, a)
    return ValueSurface.checked(values, n, 'pre', controls)


def backward_induction(rider, model, fee, mortality, strategy, lattice, step, averaged=False, keep_history=False):
    """Surface at t_1^- after the terminal condition and N - 1 continuation/jump pairs."""
    if mortality.N != model.N:
        raise ParameterError(f"mortality covers {mortality.N} periods but the model has {model.N}")
    pre = terminal_surface(rider, model, fee, mortality, lattice, averaged)
    history = {(model.N, 'pre'): pre} if keep_history else {}
    for n in range(model.N - 1, 0, -1):
        post = step(pre, n)
        pre = apply_jump_optimize(post, rider, strategy, n, lattice, model, fee, mortality, averaged)
        if keep_history:
            history[(n, 'post')] = post
            history[(n, 'pre')] = pre
    return pre, history


def initial_value(surface_pre_1, rider, model, fee, mortality, lattice, quadrature, w0, a0, averaged=False,
                  greeks=False):
    """Q_0(w0, a0) by one integral at a single point, with likelihood-method Delta and Gamma on request."""
    tilde = expected_next(surface_pre_1, rider, model, mortality, 0, lattice, averaged)
    spline = lattice.wealth_spline(tilde)
    mean, s = log_step_moments(model, fee, 1)
    if greeks and s <= 0.0:
        raise UnsupportedModelError("likelihood Greeks need a non-degenerate first-period lognormal density")
    order = 2 if greeks else 0
    if quadrature is None:
        # rows of E[V Z^m], m = 0..order
        moments = spline.expect_at(w0, mean, s, order)
    else:
        z = quadrature.normal_points
        by_row = spline(wealth_step(model, fee, 1, w0, z))
        moments = np.stack([(quadrature.normal_weights * z ** m) @ by_row for m in range(order + 1)])
    value = lattice.interpolate_base(moments[0], a0)
    if not greeks:
        return value, None, None
    delta = lattice.interpolate_base(moments[1] / (s * w0), a0)
    gamma = lattice.interpolate_base((moments[2] - s * moments[1] - moments[0]) / (s * s * w0 * w0), a0)
    return value, delta, gamma


def price(rider, model, fee, mortality, strategy, lattice=None, quadrature=None, w0=None, a0=None, greeks=False,
          keep_history=False, averaged=False) -> PricingResult:
    started = time.perf_counter()
    w0 = rider.premium if w0 is None else float(w0)
    a0 = w0 if a0 is None else float(a0)
    lattice = lattice or default_lattice(model, strategy, w0, a0)

    def step(pre, n):
        return continuation(pre, model, fee, mortality, n, lattice, quadrature, rider, averaged)

    pre_1, history = backward_induction(rider, model, fee, mortality, strategy, lattice, step, averaged,
                                        keep_history)
    value, delta, gamma = initial_value(pre_1, rider, model, fee, mortality, lattice, quadrature, w0, a0,
                                        averaged, greeks)
    runtime = time.perf_counter() - started
    method = 'ghqc-psi' if averaged else 'ghqc'
    logger.info("%s price %.6f (fee %.2f bp %s, %s) in %.2fs", method, value, fee.rate_bp, fee.kind,
                strategy.describe(), runtime)
    diagnostics = {'M': lattice.M, 'J': lattice.J, 'integration': 'exact' if quadrature is None else 'quadrature',
                   'q': None if quadrature is None else quadrature.order, 'runtime': runtime}
    if not strategy.is_static:
        diagnostics['candidates'] = strategy.candidates
    return PricingResult(value=value, method=method, premium=w0, fee_kind=fee.kind, fee_rate=fee.rate,
                         delta=delta, gamma=gamma, diagnostics=diagnostics, history=history)


def price_mortality_averaged(rider, model, fee, mortality, strategy, lattice=None, quadrature=None, w0=None,
                             a0=None, greeks=False, keep_history=False) -> PricingResult:
    return price(rider, model, fee, mortality, strategy, lattice, quadrature, w0, a0, greeks, keep_history,
                 averaged=True)
