"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto its exit codes (see app/main.py). Library code
raises them directly; nothing here depends on the command layer.
"""


class OrderBookModelError(Exception):
    """Base class for every error raised by this package."""


class DomainError(OrderBookModelError, ValueError):
    """An argument lies outside the domain of the operation (e.g. dt <= 0)."""


class IntensityValidationError(OrderBookModelError, ValueError):
    """An intensity specification is negative, non-finite or incomplete."""


class AbsorbedChainError(OrderBookModelError):
    """The total event intensity is zero, so the chain cannot move."""


class InconsistentContextError(OrderBookModelError, ValueError):
    """A density context contradicts its own event or prior state."""


class InputFormatError(OrderBookModelError, ValueError):
    """A data file does not follow the documented CSV schema."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class InsufficientDataError(OrderBookModelError):
    """Too few observations (or pairs) for the requested computation."""


class BudgetExhaustedError(OrderBookModelError):
    """A wall-clock budget ran out before the computation finished."""


class NonNestedModelsError(OrderBookModelError, ValueError):
    """A likelihood-ratio test was requested for models that are not nested."""


class PairingError(OrderBookModelError, ValueError):
    """Reports to be compared do not share the same pairing keys."""

    def __init__(self, unmatched: list[str]):
        self.unmatched = unmatched
        super().__init__(f"unmatched pairing keys: {', '.join(unmatched)}")
