"""Exception types shared across the library."""


class SmoothlawError(Exception):
    """Base class for library errors."""


class DomainError(SmoothlawError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class BudgetError(SmoothlawError, RuntimeError):
    """An exact computation would exceed the configured term budget.

    Carries a short diagnostic of how far the computation got, so callers
    can decide whether to raise the budget or fall back to an asymptotic
    route.
    """

    def __init__(self, message, terms_done=None, budget=None):
        super().__init__(message)
        self.terms_done = terms_done
        self.budget = budget


class SolverError(SmoothlawError, RuntimeError):
    """A numerical solver failed to converge; never returned silently."""
