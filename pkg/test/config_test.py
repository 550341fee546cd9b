"""
config_test.py

Tests for YAML run configurations: defaults, schema errors with dotted paths, --set overrides and the objects
built from a configuration.
"""
import numpy as np
import pytest

from config import RunConfig, apply_overrides, parse_override
from errors import ConfigError
from riders import GmabRider, GmdbRider, GmwbRider
from settings import EXIT_CONFIG

RUN = """\
premium: 100
rider: {type: gmwb, variant: spec2, guaranteed_rate: 0.05, death_benefit: 0}
market: {maturity: 2, events_per_year: 4, ratchet_every: 0, rate: 0.03, volatility: 0.25}
fee: {kind: discrete_wealth, rate_bp: 80}
mortality: {life_table: life.csv, entry_age: 60}
strategy: {kind: optimal, candidates: 51}
solver: {method: fd, wealth_nodes: 300, time_steps: 20}
"""


def test_empty_configuration_uses_defaults():
    config = RunConfig({})
    bundle = config.to_bundle()
    assert isinstance(bundle.rider, GmabRider)
    assert bundle.model.N == 40 and bundle.model.ratchet_indices == frozenset(range(4, 41, 4))
    assert bundle.fee.kind == 'continuous' and bundle.fee.rate == 0.0
    assert bundle.mortality.is_trivial
    assert bundle.strategy.is_static and bundle.solver.method == 'ghqc'
    assert bundle.w0 == 100.0 and bundle.a0 == 100.0


def test_load_resolves_life_table_next_to_config(tmp_path):
    (tmp_path / "life.csv").write_text("60,0.01\n61,0.02\n")
    path = tmp_path / "run.yaml"
    path.write_text(RUN)
    bundle = RunConfig.load(path).to_bundle()
    assert isinstance(bundle.rider, GmwbRider)
    assert bundle.rider.config.variant == 'spec2' and bundle.rider.death_benefit_type == 0
    assert bundle.fee.rate == pytest.approx(0.008)
    assert bundle.mortality.N == 8
    assert bundle.mortality.p(4) == pytest.approx(0.99)
    assert bundle.strategy.candidates == 51
    assert bundle.solver.method == 'fd' and bundle.solver.wealth_nodes == 300


def test_unknown_keys_report_their_path():
    with pytest.raises(ConfigError) as info:
        RunConfig({'market': {'rte': 0.05}})
    assert info.value.path == 'market.rte'
    assert info.value.exit_code == EXIT_CONFIG
    with pytest.raises(ConfigError) as info:
        RunConfig({'rider': {'type': 'gmab', 'variant': 'spec1'}})
    assert info.value.path == 'rider.variant'
    with pytest.raises(ConfigError) as info:
        RunConfig({'plot': True})
    assert info.value.path == 'plot'


def test_unknown_rider_type():
    with pytest.raises(ConfigError) as info:
        RunConfig({'rider': {'type': 'gmxb'}})
    assert info.value.path == 'rider.type'


def test_section_must_be_a_mapping():
    with pytest.raises(ConfigError) as info:
        RunConfig({'market': 0.05})
    assert info.value.path == 'market'


def test_invalid_values_become_config_errors():
    with pytest.raises(ConfigError) as info:
        RunConfig({'fee': {'kind': 'monthly'}}).fee()
    assert info.value.path == 'fee'
    with pytest.raises(ConfigError):
        RunConfig({'solver': {'method': 'trees'}}).solver()
    with pytest.raises(ConfigError) as info:
        RunConfig({'solver': {'integration': 'simpson'}}).solver()
    assert info.value.path == 'solver'
    with pytest.raises(ConfigError):
        RunConfig({'market': {'maturity': 1.1}}).market()


def test_overrides_are_parsed_as_yaml_scalars():
    assert parse_override('market.rate=0.03') == (['market', 'rate'], 0.03)
    assert parse_override('rider.ratchet=false') == (['rider', 'ratchet'], False)
    assert parse_override('market.volatility=[0.1, 0.2]') == (['market', 'volatility'], [0.1, 0.2])
    with pytest.raises(ConfigError):
        parse_override('market.rate')


def test_overrides_apply_on_top_of_the_file():
    data = apply_overrides({'market': {'rate': 0.05}}, ['market.rate=0.03', 'fee.rate_bp=50'])
    assert data == {'market': {'rate': 0.03}, 'fee': {'rate_bp': 50}}
    config = RunConfig.from_overrides(['market.rate=0.03', 'fee.rate_bp=50'])
    assert np.allclose(config.market().rates, 0.03)
    assert config.fee().rate == pytest.approx(0.005)
    with pytest.raises(ConfigError):
        apply_overrides({'premium': 100}, ['premium.value=3'])


def test_rates_may_vary_by_period():
    config = RunConfig({'market': {'maturity': 1, 'events_per_year': 2, 'ratchet_every': 0,
                                   'rate': [0.01, 0.02], 'volatility': [0.1, 0.3]}})
    model = config.market()
    assert model.rate(2) == 0.02 and model.volatility(1) == 0.1


def test_threshold_strategy_defaults_to_contractual_rule():
    strategy = RunConfig({'strategy': {'kind': 'threshold', 'theta': 0.5}}).strategy()
    assert strategy.rule == 'contractual' and strategy.theta == 0.5


def test_gmdb_rider_takes_its_type_from_the_rider_section():
    rider = RunConfig({'rider': {'type': 'gmdb', 'benefit_type': 1}}).rider()
    assert isinstance(rider, GmdbRider) and rider.death_benefit_type == 1


def test_mortality_errors():
    with pytest.raises(ConfigError) as info:
        RunConfig({'mortality': {'death_probabilities': [0.01, 0.02]}}).to_bundle()
    assert info.value.path == 'mortality'
    with pytest.raises(ConfigError) as info:
        RunConfig({'mortality': {'life_table': 'life.csv'}}).to_bundle()
    assert info.value.path == 'mortality.entry_age'


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "absent.yaml")


def test_seed_override_and_fee_request():
    config = RunConfig.from_overrides(['fee.bracket_bp=[0, 500]', 'fee.tolerance_bp=0.1'])
    request = config.fair_fee_request(seed=7)
    assert request.bracket_bp == (0, 500) and request.tolerance_bp == 0.1
    assert request.bundle.solver.seed == 7


def test_canonical_text_is_order_independent():
    first = RunConfig({'market': {'rate': 0.03, 'volatility': 0.1}, 'premium': 100})
    second = RunConfig({'premium': 100, 'market': {'volatility': 0.1, 'rate': 0.03}})
    assert first.canonical() == second.canonical()
    assert 'rate: 0.03' in first.canonical()


def test_solver_integration_and_glwb_bonus_schedule():
    assert RunConfig({}).solver().integration == 'exact'
    assert RunConfig.from_overrides(['solver.integration=quadrature']).solver().integration == 'quadrature'
    rider = RunConfig({'rider': {'type': 'glwb', 'bonus_schedule': [0.0, 0.01, 0.01]}}).rider()
    assert rider.config.bonus_schedule == (0.0, 0.01, 0.01)
