"""Exception hierarchy shared across the package."""


class BMGFError(Exception):
    """Base class for all errors raised by bmgf."""


class DimensionError(BMGFError, ValueError):
    """A primitive received operands whose shapes do not conform."""


class ContractError(BMGFError, ValueError):
    """A documented precondition of an operation was violated."""


class InputError(BMGFError, ValueError):
    """Malformed user input (empty argument, overlong sequence, ...)."""


class DataError(BMGFError, ValueError):
    """A dataset row or label could not be interpreted."""


class ConfigError(BMGFError, ValueError):
    """Inconsistent configuration or checkpoint/schema mismatch."""
