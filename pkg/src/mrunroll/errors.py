"""Error classes mapped to CLI exit codes (config 2, data 3, numerics 4)."""


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class DataError(ValueError):
    """Missing, corrupt or mismatched dataset / checkpoint / output files."""


class NumericalError(RuntimeError):
    """Non-finite loss or gradient encountered during optimization."""
