"""Exception types raised across the workbench."""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


class ValidationError(WorkbenchError, ValueError):
    """An input violates a documented invariant (shape, normalization, PVM, ...)."""


class PreconditionError(WorkbenchError, ValueError):
    """A transform or evaluation was called on an input it does not accept.

    The message names the remedy, e.g. symmetrizing the game first.
    """


class BudgetExceeded(WorkbenchError):
    """Exhaustive enumeration would exceed the configured budget."""

    def __init__(self, required: int, budget: int, what: str = "strategy tuples"):
        self.required = int(required)
        self.budget = int(budget)
        super().__init__(
            f"refusing to enumerate {self.required} {what} "
            f"(budget {self.budget}); raise the budget to proceed"
        )


class BoundViolation(WorkbenchError, AssertionError):
    """A proven inequality failed numerically; this always indicates a bug."""
