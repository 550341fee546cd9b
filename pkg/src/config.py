"""
config.py

Run configuration for the RiderQuad command line. A run is described by one YAML document:

    premium: 100
    base: 100                  # A(0), defaults to the premium
    rider:    {type: gmab, account: pension, withdrawal_limit: 0.15, ratchet: true, death_benefit: 3}
    market:   {maturity: 10, events_per_year: 4, ratchet_every: 4, rate: 0.05, volatility: 0.2}
    fee:      {kind: continuous, rate_bp: 271.1, bracket_bp: [0, 2000], tolerance_bp: 0.01}
    mortality: {life_table: table.csv, entry_age: 60}
    strategy: {kind: optimal, candidates: 101}
    solver:   {method: ghqc, wealth_nodes: 1600, base_nodes: 200, integration: exact, quadrature_order: 9}
    output:   {csv: out.csv, precision: 6}
    validate: {threshold: 0.01, methods: [mc, fd]}
    greeks:   {wealth_bump: 0.001, rate_bump: 0.0001, vol_bump: 0.001, asset_price: 100}

Every section is optional and filled from settings.py. Unknown keys are rejected with their dotted path, and
`--set section.key=value` overrides are parsed as YAML scalars before validation. `rate` and `volatility` may be
lists with one entry per event period. Rider keys are the fields of the rider's config class plus `death_benefit`.
"""
import copy
import dataclasses
import logging
from pathlib import Path

import yaml

from analysis import FairFeeRequest, PricingBundle, SolverSettings
from errors import ConfigError, RiderQuadError
from lattice import StrategySpec
from model import (FeeStructure, MarketModel, MortalityModel, event_schedule, load_life_table,
                   mortality_from_life_table)
from riders import RIDER_TYPES
from settings import (DEFAULT_FEE_TOLERANCE_BP, DEFAULT_RATE_BUMP, DEFAULT_VALIDATE_THRESHOLD, DEFAULT_VOL_BUMP,
                      DEFAULT_WEALTH_BUMP, FEE_BRACKET_BP, FEE_BRACKET_LIMIT_BP)

logger = logging.getLogger(__name__)

DEFAULTS = {
    'premium': 100.0,
    'base': None,
    'rider': {'type': 'gmab', 'death_benefit': 3},
    'market': {'maturity': 10.0, 'events_per_year': 4, 'ratchet_every': 4, 'rate': 0.05, 'volatility': 0.2},
    'fee': {'kind': 'continuous', 'rate_bp': 0.0, 'bracket_bp': list(FEE_BRACKET_BP),
            'tolerance_bp': DEFAULT_FEE_TOLERANCE_BP, 'limit_bp': FEE_BRACKET_LIMIT_BP},
    'mortality': {'life_table': None, 'entry_age': None, 'death_probabilities': None},
    'strategy': {field.name: field.default for field in dataclasses.fields(StrategySpec)},
    'solver': {field.name: field.default for field in dataclasses.fields(SolverSettings)},
    'output': {'csv': None, 'precision': 6},
    'validate': {'threshold': DEFAULT_VALIDATE_THRESHOLD, 'methods': None},
    'greeks': {'wealth_bump': DEFAULT_WEALTH_BUMP, 'rate_bump': DEFAULT_RATE_BUMP, 'vol_bump': DEFAULT_VOL_BUMP,
               'asset_price': None},
}


def _rider_keys(rider_type):
    if rider_type not in RIDER_TYPES:
        raise ConfigError('rider.type', f"must be one of {sorted(RIDER_TYPES)}, got {rider_type!r}")
    _, config_class = RIDER_TYPES[rider_type]
    return {field.name: field.default for field in dataclasses.fields(config_class)}


def _merge(defaults: dict, given, path: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(path, f"expected a mapping, got {type(given).__name__}")
    merged = copy.deepcopy(defaults)
    for key, value in given.items():
        dotted = f"{path}.{key}" if path else str(key)
        if key not in defaults:
            raise ConfigError(dotted, "unknown key")
        if isinstance(defaults[key], dict):
            merged[key] = _merge(defaults[key], value or {}, dotted)
        else:
            merged[key] = value
    return merged


def parse_override(text: str):
    """'a.b=v' -> (['a', 'b'], v) with v parsed as a YAML scalar."""
    key, sep, raw = text.partition('=')
    if not sep or not key.strip():
        raise ConfigError(text, "override must look like section.key=value")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(key, f"cannot parse override value {raw!r}: {exc}") from exc
    return key.strip().split('.'), value


def apply_overrides(data: dict, overrides) -> dict:
    data = copy.deepcopy(data)
    for text in overrides or ():
        keys, value = parse_override(text)
        node = data
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError('.'.join(keys), "cannot override inside a scalar")
        node[keys[-1]] = value
    return data


def validate(data: dict) -> dict:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError('', "configuration must be a mapping")
    rider = data.get('rider') or {}
    if not isinstance(rider, dict):
        raise ConfigError('rider', "expected a mapping")
    rider_type = rider.get('type', DEFAULTS['rider']['type'])
    defaults = copy.deepcopy(DEFAULTS)
    defaults['rider'].update(_rider_keys(rider_type))
    return _merge(defaults, data, '')


def _build(path, factory, **kwargs):
    try:
        return factory(**kwargs)
    except (RiderQuadError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc


class RunConfig:
    def __init__(self, data: dict, source: Path = None):
        self.data = validate(data)
        self.source = source

    @classmethod
    def load(cls, path, overrides=()) -> "RunConfig":
        path = Path(path)
        try:
            with path.open() as handle:
                raw = yaml.safe_load(handle) or {}
        except FileNotFoundError as exc:
            raise ConfigError(str(path), "configuration file not found") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"invalid YAML: {exc}") from exc
        return cls(apply_overrides(raw, overrides), path)

    @classmethod
    def from_overrides(cls, overrides=()) -> "RunConfig":
        return cls(apply_overrides({}, overrides))

    def canonical(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True, default_flow_style=False)

    def section(self, name: str) -> dict:
        return self.data[name]

    @property
    def premium(self) -> float:
        return float(self.data['premium'])

    @property
    def base(self) -> float:
        base = self.data['base']
        return self.premium if base is None else float(base)

    def market(self) -> MarketModel:
        m = self.data['market']
        times, ratchets = _build('market', event_schedule, maturity=m['maturity'],
                                 events_per_year=m['events_per_year'], ratchet_every=m['ratchet_every'])
        return _build('market', MarketModel, times=times, rates=m['rate'], volatilities=m['volatility'],
                      ratchet_indices=ratchets)

    def rider(self):
        settings = dict(self.data['rider'])
        rider_type = settings.pop('type')
        death_benefit = settings.pop('death_benefit')
        rider_class, config_class = RIDER_TYPES[rider_type]
        config = _build('rider', config_class, **settings)
        if rider_type == 'gmdb':
            return _build('rider', rider_class, config=config, premium=self.premium)
        return _build('rider', rider_class, config=config, premium=self.premium, death_benefit_type=death_benefit)

    def fee(self) -> FeeStructure:
        f = self.data['fee']
        return _build('fee', FeeStructure, kind=f['kind'], rate=float(f['rate_bp']) * 1e-4)

    def mortality(self, model: MarketModel) -> MortalityModel:
        m = self.data['mortality']
        if m['death_probabilities'] is not None:
            return _build('mortality.death_probabilities', MortalityModel.from_probabilities,
                          q=m['death_probabilities'])
        if m['life_table'] is None:
            return MortalityModel.none(model.N)
        if m['entry_age'] is None:
            raise ConfigError('mortality.entry_age', "required with a life table")
        table_path = Path(m['life_table'])
        if not table_path.is_absolute() and self.source is not None:
            table_path = self.source.parent / table_path
        return mortality_from_life_table(load_life_table(table_path), float(m['entry_age']), model.times)

    def strategy(self) -> StrategySpec:
        settings = dict(self.data['strategy'])
        if settings['kind'] == 'threshold' and settings['rule'] == 'none':
            settings['rule'] = 'contractual'
        return _build('strategy', StrategySpec, **settings)

    def solver(self, seed=None) -> SolverSettings:
        settings = dict(self.data['solver'])
        if seed is not None:
            settings['seed'] = seed
        return _build('solver', SolverSettings, **settings)

    def to_bundle(self, seed=None) -> PricingBundle:
        model = self.market()
        mortality = self.mortality(model)
        if mortality.N != model.N:
            raise ConfigError('mortality', f"covers {mortality.N} periods but the market has {model.N}")
        return _build('', PricingBundle, rider=self.rider(), model=model, fee=self.fee(), mortality=mortality,
                      strategy=self.strategy(), solver=self.solver(seed), w0=self.premium, a0=self.base)

    def fair_fee_request(self, seed=None) -> FairFeeRequest:
        f = self.data['fee']
        return _build('fee', FairFeeRequest, bundle=self.to_bundle(seed), bracket_bp=tuple(f['bracket_bp']),
                      tolerance_bp=f['tolerance_bp'], limit_bp=f['limit_bp'])
