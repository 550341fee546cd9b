"""
errors.py

Exception hierarchy for RiderQuad. Every error carries the process exit code the command line front end
returns when the error escapes a command.

Classes:
- RiderQuadError: base class, exit code 3 (numerical failure) unless overridden.
- ParameterError, BracketError, SingularSystemError, NumericalError: numerical kernels and solvers.
- MortalityDataError: life-table input problems.
- ContractError: withdrawals outside the admissible set.
- UnsupportedStrategyError, UnsupportedModelError: solver/strategy combinations that cannot be priced.
- ConfigError: schema violations, exit code 2.
- ValidationFailure: cross-solver thresholds not met, exit code 4.
"""
from settings import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION


class RiderQuadError(Exception):
    exit_code = EXIT_NUMERICAL


class ParameterError(RiderQuadError, ValueError):
    pass


class BracketError(RiderQuadError):
    def __init__(self, message, lo=None, hi=None, f_lo=None, f_hi=None):
        super().__init__(message)
        self.lo, self.hi = lo, hi
        self.f_lo, self.f_hi = f_lo, f_hi


class SingularSystemError(RiderQuadError):
    pass


class MortalityDataError(RiderQuadError):
    exit_code = EXIT_CONFIG


class ContractError(RiderQuadError):
    pass


class NumericalError(RiderQuadError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{key}={value}" for key, value in self.diagnostics.items())
        return f"{base} ({details})"


class UnsupportedStrategyError(RiderQuadError):
    exit_code = EXIT_CONFIG


class UnsupportedModelError(RiderQuadError):
    exit_code = EXIT_CONFIG


class ConfigError(RiderQuadError):
    exit_code = EXIT_CONFIG

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class ValidationFailure(RiderQuadError):
    exit_code = EXIT_VALIDATION
