"""
benchmarks.py

Embedded presets for the four GMAB benchmark tables so `RiderQuad.py bench N` needs no external files. Every
contract runs 10 years with quarterly events, an annual ratchet and a premium of 100.

Tables:
1. No withdrawal, sigma in {10%, 20%}; reference fees from the quadrature and Monte Carlo columns.
2. Pension account (15% annual penalty threshold), static quarterly withdrawal of 3.75% or 4% of the wealth
   account, sigma = 20%.
3. Super account, optimal withdrawals, sigma in {10%, 20%}.
4. Pension account, optimal withdrawals, sigma in {10%, 20%}; the sigma = 20% cells also carry the quarterly
   discrete-fee and finite-difference references.

Tables 3 and 4 report `uplift`, the relative increase of the fee over the no-withdrawal fee of table 1.
"""
import logging
import time
from dataclasses import dataclass, replace

from analysis import FairFeeRequest, PricingBundle, SolverSettings, fair_fee
from errors import ParameterError
from lattice import StrategySpec
from model import FeeStructure, flat_market
from riders import GmabConfig, GmabRider

logger = logging.getLogger(__name__)

RATES = (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07)
MATURITY = 10.0
EVENTS_PER_YEAR = 4
RATCHET_EVERY = 4
PREMIUM = 100.0

TABLE_1 = {
    0.1: ((337.2, 186.0, 116.8, 77.94, 53.91, 38.54, 28.11), (338.2, 186.8, 117.3, 78.31, 54.32, 38.77, 28.30)),
    0.2: ((998.7, 637.1, 458.0, 346.9, 271.1, 216.3, 175.1), (999.8, 637.7, 458.5, 347.5, 271.6, 216.7, 175.3)),
}
TABLE_2 = {
    0.15: ((1084, 669.1, 464.1, 339.0, 255.0, 195.7, 152.1), (1085, 669.5, 464.4, 339.2, 255.2, 195.7, 152.2)),
    0.16: ((185.3, 152.9, 126.6, 105.1, 87.54, 73.21, 61.40), (185.3, 152.9, 126.6, 105.1, 87.51, 73.14, 61.36)),
}
TABLE_3 = {
    0.1: (370.7, 191.2, 118.1, 78.52, 54.47, 39.00, 28.38),
    0.2: (1235, 700.1, 478.8, 355.5, 275.2, 218.8, 176.9),
}
TABLE_4 = {
    0.1: (472.6, 227.7, 135.4, 88.15, 60.24, 42.58, 30.63),
    0.2: (1474, 836.1, 552.8, 399.1, 304.3, 239.6, 192.5),
}
TABLE_4_DISCRETE = (1479, 836.3, 553.6, 399.7, 304.7, 239.9, 192.8)
TABLE_4_FD = (1466, 833.7, 551.7, 398.6, 304.0, 239.4, 192.4)

TABLES = (1, 2, 3, 4)


@dataclass(frozen=True)
class BenchCell:
    table: int
    panel: str
    rate: float
    volatility: float
    reference_bp: float
    reference_mc_bp: float = None
    reference_discrete_bp: float = None
    reference_fd_bp: float = None
    static_reference_bp: float = None
    account: str = 'super'
    strategy: StrategySpec = StrategySpec()
    base_nodes: int = 400

    @property
    def key(self):
        return self.table, self.panel, self.rate


def table_cells(table_id: int):
    if table_id not in TABLES:
        raise ParameterError(f"benchmark table must be one of {TABLES}, got {table_id}")
    cells = []
    if table_id == 1:
        for sigma, (ghqc, mc) in TABLE_1.items():
            for i, r in enumerate(RATES):
                cells.append(BenchCell(1, f"sigma={sigma:.0%}", r, sigma, ghqc[i], reference_mc_bp=mc[i],
                                       base_nodes=200))
    elif table_id == 2:
        for g, (ghqc, mc) in TABLE_2.items():
            for i, r in enumerate(RATES):
                cells.append(BenchCell(2, f"{g:.0%} annual", r, 0.2, ghqc[i], reference_mc_bp=mc[i],
                                       account='pension', strategy=StrategySpec.static('wealth_rate', g)))
    else:
        references = TABLE_3 if table_id == 3 else TABLE_4
        account = 'super' if table_id == 3 else 'pension'
        for sigma, fees in references.items():
            for i, r in enumerate(RATES):
                extra = {}
                if table_id == 4 and sigma == 0.2:
                    extra = {'reference_discrete_bp': TABLE_4_DISCRETE[i], 'reference_fd_bp': TABLE_4_FD[i]}
                cells.append(BenchCell(table_id, f"sigma={sigma:.0%}", r, sigma, fees[i],
                                       static_reference_bp=TABLE_1[sigma][0][i], account=account,
                                       strategy=StrategySpec.optimal(), **extra))
    return cells


def cell_bundle(cell: BenchCell, solver: SolverSettings = None, fee_kind: str = 'continuous') -> PricingBundle:
    solver = solver or SolverSettings()
    if solver.base_nodes is None:
        solver = replace(solver, base_nodes=cell.base_nodes)
    model = flat_market(MATURITY, EVENTS_PER_YEAR, cell.rate, cell.volatility, RATCHET_EVERY)
    rider = GmabRider(GmabConfig(account=cell.account, withdrawal_limit=0.15, ratchet=True), premium=PREMIUM)
    strategy = cell.strategy
    if not strategy.is_static and solver.method == 'mc':
        raise ParameterError("optimal-withdrawal tables cannot be priced by Monte Carlo")
    return PricingBundle(rider, model, FeeStructure(fee_kind), strategy=strategy, solver=solver)


def _relative(value, reference):
    return None if value is None or reference is None else value / reference - 1.0


def run_cell(cell: BenchCell, solver: SolverSettings = None, with_mc: bool = False, with_fd: bool = True,
             with_discrete: bool = True) -> dict:
    """Fair fees for one benchmark cell; picklable so bench sweeps can fan out over processes."""
    started = time.perf_counter()
    solver = solver or SolverSettings()
    result = fair_fee(FairFeeRequest(cell_bundle(cell, solver)))
    row = {'table': cell.table, 'panel': cell.panel, 'r': cell.rate, 'sigma': cell.volatility,
           'fee_bp': result.rate_bp, 'published_bp': cell.reference_bp,
           'rel_diff': _relative(result.rate_bp, cell.reference_bp)}
    if cell.static_reference_bp is not None:
        row['uplift'] = result.rate_bp / cell.static_reference_bp - 1.0
        row['published_uplift'] = cell.reference_bp / cell.static_reference_bp - 1.0
    if with_mc and cell.reference_mc_bp is not None:
        mc = fair_fee(FairFeeRequest(cell_bundle(cell, replace(solver, method='mc'))))
        row.update(mc_bp=mc.rate_bp, published_mc_bp=cell.reference_mc_bp,
                   mc_rel_diff=_relative(mc.rate_bp, result.rate_bp))
    if with_fd and cell.reference_fd_bp is not None:
        fd = fair_fee(FairFeeRequest(cell_bundle(cell, replace(solver, method='fd'))))
        row.update(fd_bp=fd.rate_bp, published_fd_bp=cell.reference_fd_bp,
                   fd_rel_diff=_relative(fd.rate_bp, result.rate_bp))
    if with_discrete and cell.reference_discrete_bp is not None:
        discrete = fair_fee(FairFeeRequest(cell_bundle(cell, solver, fee_kind='discrete_wealth')))
        equivalent = discrete.continuous_equivalent * 1e4
        row.update(discrete_bp=equivalent, published_discrete_bp=cell.reference_discrete_bp,
                   discrete_rel_diff=_relative(equivalent, result.rate_bp))
    row['runtime'] = time.perf_counter() - started
    logger.info("table %d %s r=%.0f%%: %.2f bp (published %.4g bp)", cell.table, cell.panel, cell.rate * 100,
                result.rate_bp, cell.reference_bp)
    return row
