"""Sum of double-Nakagami-m random vectors and randomly reconfigurable
surface link metrics."""

from .errors import DomainError, NumericalError, OracleError, ParameterError
from .sumdist import NakagamiParams, SumDistribution, build, from_params

__all__ = [
    "DomainError",
    "NakagamiParams",
    "NumericalError",
    "OracleError",
    "ParameterError",
    "SumDistribution",
    "build",
    "from_params",
]

__version__ = "0.1.0"
