"""
riders_test.py

Tests for the rider jump maps, cashflows, payoffs and death benefits.
"""
import numpy as np
import pytest

from errors import ContractError, ParameterError
from model import Event
from riders import (RIDER_TYPES, GlwbConfig, GlwbRider, GmabConfig, GmabRider, GmdbConfig, GmdbRider, GmibConfig,
                    GmibRider, GmwbConfig, GmwbRider, gmab_penalty, gmdb_benefit, gmwb_spec_jump,
                    penalised_cashflow)

QUARTER = Event(index=3, time=0.75, dt=0.25, ratchet=False, maturity=10.0)
RATCHET_DATE = Event(index=4, time=1.0, dt=0.25, ratchet=True, maturity=10.0)
MATURITY = Event(index=40, time=10.0, dt=0.25, ratchet=True, maturity=10.0)


def test_gmab_super_penalises_any_withdrawal_below_base():
    # W < A: the base falls by A * gamma / W
    assert gmab_penalty('super', 80.0, 100.0, 8.0, 3.0) == pytest.approx(10.0)
    # W >= A: dollar for dollar
    assert gmab_penalty('super', 120.0, 100.0, 8.0, 4.5) == pytest.approx(8.0)


def test_gmab_pension_penalises_only_above_threshold():
    g_n = 0.15 * 80.0 * 0.25
    assert gmab_penalty('pension', 80.0, 100.0, g_n, g_n) == pytest.approx(g_n)
    assert gmab_penalty('pension', 80.0, 100.0, 4.0, g_n) == pytest.approx(5.0)


def test_super_penalty_dominates_pension_penalty():
    rng = np.random.default_rng(21)
    w = rng.uniform(1.0, 200.0, 5000)
    a = rng.uniform(0.0, 200.0, 5000)
    gamma = w * rng.uniform(0.0, 1.0, 5000)
    g_n = 0.15 * w * 0.25
    super_cut = gmab_penalty('super', w, a, gamma, g_n)
    pension_cut = gmab_penalty('pension', w, a, gamma, g_n)
    assert np.all(super_cut >= pension_cut * (1.0 - 1e-12))
    assert np.any(super_cut > pension_cut)


def test_gmab_transition_and_ratchet():
    rider = GmabRider(GmabConfig('pension', 0.15, True))
    w_plus, a_plus, cash = rider.transition(RATCHET_DATE, np.array([120.0, 80.0]), np.array([100.0, 100.0]),
                                            np.array([2.0, 0.0]))
    assert w_plus.tolist() == [118.0, 80.0]
    # Ratchet to the pre-withdrawal wealth, then remove the withdrawal
    assert a_plus == pytest.approx([118.0, 100.0])
    assert cash.tolist() == [2.0, 0.0]


def test_gmab_without_ratchet_keeps_base():
    rider = GmabRider(GmabConfig('super', 0.15, False))
    _, a_plus, _ = rider.transition(RATCHET_DATE, 150.0, 100.0, 0.0)
    assert a_plus == pytest.approx(100.0)


def test_gmab_full_surrender_exhausts_base():
    rng = np.random.default_rng(5)
    w = rng.uniform(1.0, 200.0, 50)
    a = rng.uniform(1.0, 200.0, 50)
    for account in ('super', 'pension'):
        rider = GmabRider(GmabConfig(account))
        w_plus, a_plus, cash = rider.transition(RATCHET_DATE, w, a, w)
        assert np.all(w_plus == 0.0)
        assert np.all(a_plus == 0.0)
        assert np.allclose(cash, w)


def test_gmab_rejects_withdrawal_above_wealth():
    with pytest.raises(ContractError):
        GmabRider().transition(QUARTER, 50.0, 100.0, 60.0)


def test_gmab_maturity_payoff():
    assert GmabRider().maturity_payoff(MATURITY, np.array([80.0, 130.0]), 100.0).tolist() == [100.0, 130.0]


def test_gmab_config_validation():
    with pytest.raises(ParameterError):
        GmabConfig(account='savings')
    with pytest.raises(ParameterError):
        GmabConfig(withdrawal_limit=1.5)


def test_penalised_cashflow():
    assert penalised_cashflow(5.0, 2.5, 0.1) == pytest.approx(2.5 + 0.9 * 2.5)
    assert penalised_cashflow(2.0, 2.5, 0.1) == pytest.approx(2.0)


def test_gmwb_basic_transition():
    rider = GmwbRider(GmwbConfig('basic', penalty=0.1))
    g_n = rider.contractual_amount(QUARTER, 90.0, 100.0)
    assert g_n == pytest.approx(2.5)
    w_plus, a_plus, cash = rider.transition(QUARTER, 90.0, 100.0, 10.0)
    assert w_plus == pytest.approx(80.0)
    assert a_plus == pytest.approx(90.0)
    assert cash == pytest.approx(2.5 + 0.9 * 7.5)
    with pytest.raises(ContractError):
        rider.transition(QUARTER, 90.0, 100.0, 101.0)


def test_gmwb_basic_maturity_takes_penalised_base():
    rider = GmwbRider(GmwbConfig('basic', penalty=0.1))
    payoff = rider.maturity_payoff(MATURITY, np.array([0.0, 50.0]), np.array([10.0, 10.0]))
    assert payoff == pytest.approx([2.5 + 0.9 * 7.5, 50.0])


def test_gmwb_spec_variants_within_contractual_amount():
    for variant in ('spec1', 'spec2', 'spec3'):
        assert gmwb_spec_jump(variant, 80.0, 100.0, 2.0, 2.5) == pytest.approx(98.0)


def test_gmwb_spec_variants_above_contractual_amount():
    w, a, gamma, g_n = 80.0, 100.0, 20.0, 2.5
    assert gmwb_spec_jump('spec1', w, a, gamma, g_n) == pytest.approx(min(80.0, 100.0 * 60.0 / 80.0))
    assert gmwb_spec_jump('spec2', w, a, gamma, g_n) == pytest.approx(60.0)
    assert gmwb_spec_jump('spec3', w, a, gamma, g_n) == pytest.approx(97.5 * 60.0 / 77.5)


def test_gmwb_spec3_exhausts_base_when_wealth_is_withdrawn():
    assert gmwb_spec_jump('spec3', 2.0, 100.0, 2.0, 2.5) == pytest.approx(98.0)
    assert gmwb_spec_jump('spec3', 2.0, 100.0, 2.0 + 1e-9, 1.0) == pytest.approx(0.0)


def test_gmwb_industry_charges_and_ratchet_after():
    config = GmwbConfig('spec2', excess_penalty=0.1, early_penalty=0.1, entry_age=55.0, ratchet_timing='after',
                        guaranteed_rate=0.05)
    rider = GmwbRider(config)
    w_plus, a_plus, cash = rider.transition(RATCHET_DATE, 120.0, 100.0, 21.25)
    # G = 1.25, excess 20 charged 10%, then 10% early charge before age 59.5
    assert cash == pytest.approx((21.25 - 2.0) * 0.9)
    assert w_plus == pytest.approx(98.75)
    assert a_plus == pytest.approx(98.75)


def test_gmwb_ratchet_before_raises_admissible_base():
    rider = GmwbRider(GmwbConfig('basic', ratchet_timing='before'))
    assert rider.admissible_max(RATCHET_DATE, 130.0, 100.0) == pytest.approx(130.0)
    assert rider.admissible_max(QUARTER, 130.0, 100.0) == pytest.approx(100.0)


def test_glwb_branches():
    rider = GlwbRider(GlwbConfig(withdrawal_rate=0.05, bonus_rate=0.04, penalty=0.1, ratchet=True))
    # No withdrawal: bonus, and a ratchet to W on ratchet dates
    _, a_plus, _ = rider.transition(QUARTER, 90.0, 100.0, 0.0)
    assert a_plus == pytest.approx(101.0)
    _, a_plus, _ = rider.transition(RATCHET_DATE, 150.0, 100.0, 0.0)
    assert a_plus == pytest.approx(150.0)
    # Contractual withdrawal keeps the base
    _, a_plus, cash = rider.transition(QUARTER, 90.0, 100.0, 1.25)
    assert a_plus == pytest.approx(100.0) and cash == pytest.approx(1.25)
    # Excess withdrawal scales the base
    w_plus, a_plus, cash = rider.transition(QUARTER, 90.0, 100.0, 11.25)
    assert w_plus == pytest.approx(78.75)
    assert a_plus == pytest.approx(100.0 * 78.75 / 88.75)
    assert cash == pytest.approx(1.25 + 0.9 * 10.0)


def test_glwb_bonus_is_annual_unless_scheduled():
    annual = GlwbRider(GlwbConfig(bonus_rate=0.05, ratchet=False))
    _, a_plus, _ = annual.transition(QUARTER, 90.0, 100.0, 0.0)
    assert a_plus == pytest.approx(100.0 * (1.0 + 0.05 * 0.25))
    scheduled = GlwbRider(GlwbConfig(bonus_rate=0.5, ratchet=False, bonus_schedule=[0.0, 0.0, 0.05]))
    _, a_plus, _ = scheduled.transition(QUARTER, 90.0, 100.0, 0.0)
    assert a_plus == pytest.approx(105.0)
    with pytest.raises(ParameterError):
        scheduled.transition(RATCHET_DATE, 90.0, 100.0, 0.0)
    with pytest.raises(ParameterError):
        GlwbConfig(bonus_schedule=[0.01, -0.02])


def test_glwb_maturity_returns_wealth():
    assert GlwbRider().maturity_payoff(MATURITY, 42.0, 100.0) == pytest.approx(42.0)


def test_gmib_payoff_and_rollup():
    rider = GmibRider(GmibConfig(annuity_ratio=0.8, rollup_rate=0.04, ratchet=True))
    assert rider.maturity_payoff(MATURITY, np.array([70.0, 90.0]), 100.0) == pytest.approx([80.0, 90.0])
    _, a_plus, cash = rider.transition(QUARTER, 90.0, 100.0, 0.0)
    assert a_plus == pytest.approx(101.0) and cash == 0.0
    _, a_plus, _ = rider.transition(RATCHET_DATE, 150.0, 100.0, 0.0)
    assert a_plus == pytest.approx(150.0)
    with pytest.raises(ContractError):
        rider.transition(QUARTER, 90.0, 100.0, 1.0)


def test_gmdb_types():
    w = np.array([80.0, 120.0])
    assert gmdb_benefit(0, w, 100.0, 100.0).tolist() == [100.0, 120.0]
    assert gmdb_benefit(1, w, 100.0, 100.0).tolist() == [100.0, 100.0]
    assert gmdb_benefit(2, w, 50.0, 100.0).tolist() == [100.0, 120.0]
    assert gmdb_benefit(3, w, 100.0, 100.0).tolist() == [80.0, 120.0]


def test_gmdb_rider_uses_its_type_for_death_benefit():
    rider = GmdbRider(GmdbConfig(benefit_type=0))
    assert rider.death_benefit(QUARTER, 80.0, 100.0) == pytest.approx(100.0)
    assert rider.maturity_payoff(MATURITY, 80.0, 100.0) == pytest.approx(80.0)
    assert not rider.allows_withdrawal


def test_rider_registry_covers_all_riders():
    assert set(RIDER_TYPES) == {'gmab', 'gmwb', 'glwb', 'gmib', 'gmdb'}


def test_rider_rejects_bad_premium_and_death_type():
    with pytest.raises(ParameterError):
        GmabRider(premium=0.0)
    with pytest.raises(ParameterError):
        GlwbRider(death_benefit_type=7)
