"""Exception hierarchy shared across the package.

Two broad failure classes matter to callers (and to the CLI exit codes):
bad input data versus a numerical/model failure on data that loaded fine.
"""


class PriceShockError(Exception):
    """Base class for all package errors."""


class DataValidationError(PriceShockError):
    """Input files or arguments violate a schema or invariant."""


class NumericalModelError(PriceShockError):
    """A numeric procedure failed on otherwise well-formed inputs."""


class NonProductiveEconomyError(NumericalModelError):
    """A technology-matrix column sum reaches 1: the economy cannot produce."""


class ConvergenceError(NumericalModelError):
    """An iterative solver exhausted its budget without converging."""


class InfeasibleBudgetError(NumericalModelError):
    """Committed consumption costs more than the available budget."""


class SeparationError(NumericalModelError):
    """Binary-response likelihood is unbounded (complete separation)."""
