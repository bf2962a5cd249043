"""Exception types shared across the toolkit."""


class MmdError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(MmdError):
    """Raised when inputs, parameters, or file contents violate a contract."""


class SolverError(MmdError):
    """Raised when a decomposition or estimation routine cannot proceed."""
