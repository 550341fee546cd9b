"""
pde_solver_test.py

Tests for the Crank-Nicolson validator: the spatial operator, closed-form agreement and agreement with the
quadrature pricer.
"""
import math

import numpy as np
import pytest

from analysis import gmab_closed_form
from errors import ParameterError
from ghqc_solver import price
from lattice import Lattice, StrategySpec
from model import FeeStructure, MortalityModel, flat_market
from pde_solver import FdScheme, _apply, price_pde, space_operator
from riders import GmabConfig, GmabRider, GmdbConfig, GmdbRider

RATE, VOL, FEE = 0.05, 0.2, 0.01


@pytest.fixture(scope='module')
def market():
    return flat_market(1.0, 4, RATE, VOL)


@pytest.fixture(scope='module')
def lattice(market):
    return Lattice.build(market, 100.0, 100.0, wealth_nodes=401, base_nodes=40)


@pytest.mark.parametrize("kwargs", [
    {'time_steps': 0},
    {'time_steps': 2.5},
    {'theta': 0.4},
    {'theta': 1.1},
    {'rannacher': -1},
])
def test_scheme_validation(kwargs):
    with pytest.raises(ParameterError):
        FdScheme(**kwargs)


def test_operator_discounts_constants(market):
    h = 0.05
    operator = space_operator(market, FeeStructure('continuous', FEE), 1, h, 50)
    out = _apply(*operator, np.full((50, 1), 3.0))
    assert np.allclose(out, -RATE * 3.0)


def test_operator_on_wealth_returns_minus_fee(market):
    h = 0.01
    x = h * np.arange(60)
    operator = space_operator(market, FeeStructure('continuous', FEE), 1, h, x.size)
    out = _apply(*operator, np.exp(x)[:, None])[:, 0]
    # Interior rows and the linear upper boundary both see dQ/dtau = -alpha W
    assert np.allclose(out[1:] / np.exp(x[1:]), -FEE, atol=1e-3)


def test_static_gmab_matches_black_scholes(market, lattice):
    rider = GmabRider(GmabConfig('super', 0.15, ratchet=False))
    result = price_pde(rider, market, FeeStructure('continuous', FEE), MortalityModel.none(market.N),
                       StrategySpec.static(), FdScheme(40), lattice=lattice)
    assert result.method == 'fd'
    assert result.value == pytest.approx(gmab_closed_form(100.0, 100.0, RATE, VOL, 1.0, FEE), rel=2e-3)
    assert result.diagnostics['time_steps'] == 40


def test_wealth_payoff_loses_the_fee(market, lattice):
    rider = GmdbRider(GmdbConfig(benefit_type=3))
    result = price_pde(rider, market, FeeStructure('continuous', FEE), MortalityModel.none(market.N),
                       StrategySpec.static(), lattice=lattice)
    assert result.value == pytest.approx(100.0 * math.exp(-FEE), rel=1e-4)


def test_ratchet_gmab_agrees_with_quadrature():
    market = flat_market(2.0, 2, RATE, VOL, ratchet_every=1)
    lattice = Lattice.build(market, 100.0, 100.0, 401, 80)
    rider = GmabRider(GmabConfig('super', 0.15, ratchet=True))
    args = (rider, market, FeeStructure('continuous', FEE), MortalityModel.none(market.N), StrategySpec.static())
    fd = price_pde(*args, FdScheme(40), lattice=lattice)
    ghqc = price(*args, lattice)
    assert fd.value == pytest.approx(ghqc.value, rel=3e-3)


@pytest.mark.parametrize("strategy", [StrategySpec.static(), StrategySpec.optimal(11)], ids=['static', 'optimal'])
def test_averaged_form_matches_direct_form(market, lattice, strategy):
    mortality = MortalityModel.from_probabilities([0.01, 0.01, 0.02, 0.02])
    rider = GmabRider(GmabConfig('super', 0.15, ratchet=False), death_benefit_type=1)
    args = (rider, market, FeeStructure('continuous', FEE), mortality, strategy, FdScheme(20))
    direct = price_pde(*args, lattice=lattice)
    averaged = price_pde(*args, lattice=lattice, averaged=True)
    assert averaged.value == pytest.approx(direct.value, rel=1e-6)


def test_crank_nicolson_converges_at_second_order():
    market = flat_market(1.0, 1, RATE, VOL)
    lattice = Lattice.build(market, 100.0, 100.0, 401, 20)
    rider = GmabRider(GmabConfig('super', 0.15, ratchet=False))
    values = [price_pde(rider, market, FeeStructure('continuous', FEE), MortalityModel.none(1), StrategySpec.static(),
                        FdScheme(steps), lattice=lattice).value for steps in (8, 16, 32)]
    ratio = (values[0] - values[1]) / (values[1] - values[2])
    assert 3.0 <= ratio <= 5.0
