"""
results.py

Result records returned by the RiderQuad solvers and analysis routines.

Classes:
- PricingResult: contract value Q_0 at (W(0), A(0)) with solver diagnostics, optional Monte Carlo standard error and
  optional likelihood-method Delta/Gamma.
- FairFeeResult: fair fee from the root search with the full evaluation trail.
- GreeksReport: Delta/Gamma of the contract and of the guarantee (U = Q - W), plus Rho and Vega when bumped.
"""
from dataclasses import dataclass, field


@dataclass
class PricingResult:
    value: float
    method: str
    premium: float
    fee_kind: str
    fee_rate: float
    standard_error: float = None
    delta: float = None
    gamma: float = None
    diagnostics: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict, repr=False)

    @property
    def fee_bp(self) -> float:
        return self.fee_rate * 1e4

    @property
    def excess_over_premium(self) -> float:
        """Q_0 - W(0) as a fraction of the premium."""
        return self.value / self.premium - 1.0

    @property
    def runtime(self) -> float:
        return self.diagnostics.get('runtime', 0.0)


@dataclass
class FairFeeResult:
    rate: float
    method: str
    fee_kind: str
    iterations: int
    value_at_root: float
    bracket_bp: tuple
    continuous_equivalent: float = None
    evaluations: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def rate_bp(self) -> float:
        return self.rate * 1e4


@dataclass
class GreeksReport:
    value: float
    delta: float
    gamma: float
    method: str
    rho: float = None
    vega: float = None

    @property
    def delta_guarantee(self) -> float:
        return self.delta - 1.0

    @property
    def gamma_guarantee(self) -> float:
        return self.gamma
