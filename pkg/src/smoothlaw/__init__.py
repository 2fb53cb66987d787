"""Saddle-point probability law on friable integers.

Exact counting oracles, the saddle-point layer for the partial Euler
product zeta(s, y), Dickman-function machinery, the bias P(x, y, z) of the
law and the defect Delta(x, y) of the division model, plus a seeded
Monte Carlo sampler of the law.
"""

from .errors import BudgetError, DomainError, SmoothlawError, SolverError

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "DomainError",
    "SmoothlawError",
    "SolverError",
    "__version__",
]
