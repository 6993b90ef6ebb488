"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """A grid, solver, or run configuration failed validation."""


class BudgetError(Exception):
    """A computation would exceed its cost budget.

    Carries the largest admissible size so callers can report what a
    passing configuration looks like.
    """

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class BlowUpError(Exception):
    """Raised only when a blow-up terminated run cannot even be reported."""
