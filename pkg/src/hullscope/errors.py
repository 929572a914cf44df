"""Exception hierarchy. Each class carries the CLI exit code for its category."""


class HullscopeError(Exception):
    exit_code = 6


class ConfigError(HullscopeError, ValueError):
    exit_code = 2


class DataError(HullscopeError, ValueError):
    exit_code = 3


class SolverError(HullscopeError, RuntimeError):
    exit_code = 4


class SamplerError(HullscopeError, RuntimeError):
    exit_code = 5


class BracketFailure(SamplerError):
    """No multiplier bracket found: the level is at or below the optimum, or the direction is degenerate."""


class NonMonotone(SamplerError):
    """Loss along the multiplier path violated monotonicity beyond tolerance."""
