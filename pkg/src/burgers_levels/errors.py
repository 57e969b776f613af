"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent inputs: cutoff mismatch, bad grid, malformed config."""


class UnsupportedRegimeError(ValueError):
    """Parameters outside the range the method covers (e.g. alpha >= 1)."""


class InfeasibleBaseError(ValueError):
    """A base spectrum too small to leave a positive residual for level 0."""


class OutOfRegimeError(ValueError):
    """Parameters outside the validity window of a decay estimate."""


class DiagnosticError(RuntimeError):
    """A diagnostic could not be evaluated on the data it was given."""
