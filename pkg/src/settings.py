"""
Defaults for the RiderQuad pricing engine: lattice sizes per strategy, the continuation integration mode and
quadrature order, finite-difference and Monte Carlo settings, fee-search limits, exit codes and console colours.

Every value here is a default only: run configurations and the command line override them per run.
"""

# Continuation integrals: exact piecewise-cubic integration, or a Gauss-Hermite rule of the given order
INTEGRATION_MODES = ('exact', 'quadrature')
DEFAULT_INTEGRATION = 'exact'
DEFAULT_QUADRATURE_ORDER = 9
MAX_QUADRATURE_ORDER = 64

# Lattice (wealth nodes count the M intervals, so M + 1 points, base nodes J include the zero-base slice)
DEFAULT_WEALTH_NODES = 1600
DEFAULT_WEALTH_NODES_WITHDRAWAL = 400
DEFAULT_BASE_NODES = 200
DEFAULT_BASE_NODES_WITHDRAWAL = 400
WEALTH_FLOOR = 1e-10
TAIL_STDEVS = 5.0
MIN_UPPER_MULTIPLE = 3.0
BASE_FLOOR_FRACTION = 1e-2

# Withdrawal optimisation
DEFAULT_WITHDRAWAL_CANDIDATES = 101
JUMP_CHUNK_POINTS = 2_000_000

# Finite differences
DEFAULT_FD_TIME_STEPS = 40
DEFAULT_RANNACHER_STEPS = 2
DEFAULT_FD_THETA = 0.5

# Monte Carlo
DEFAULT_MC_PATHS = 20_000_000
DEFAULT_MC_BATCH = 100_000
DEFAULT_SEED = 20160101

# Fair fee search (rates are annual fractions, tolerances in basis points)
FEE_BRACKET_BP = (0.0, 2000.0)
FEE_BRACKET_LIMIT_BP = 5000.0
DEFAULT_FEE_TOLERANCE_BP = 0.01
ROOT_MAX_ITERATIONS = 200

# Greeks
DEFAULT_WEALTH_BUMP = 1e-3
DEFAULT_RATE_BUMP = 1e-4
DEFAULT_VOL_BUMP = 1e-3

# GMWB industry variant early-withdrawal age
EARLY_WITHDRAWAL_AGE = 59.5

# Cross-solver validation thresholds (relative)
DEFAULT_VALIDATE_THRESHOLD = 0.01
MC_STANDARD_ERRORS = 3.0

# CLI exit codes
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

# Default colors for console output
DEFAULT_COLORS = {
    'title': '#539eff',
    'value': 'bright_white',
    'fee': 'bright_yellow',
    'pass': 'green1',
    'fail': 'red3',
    'reference': 'bright_cyan',
    'diagnostic': 'bright_magenta',
    'error': 'bold red'
}
