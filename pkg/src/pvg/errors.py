"""Exception types shared across the package."""


class PvgError(Exception):
    """Base class for all package-specific errors."""


class ParseError(PvgError):
    """Raised on malformed input text (formulas, executions, games, machines).

    Carries an optional position (offset into the input) for diagnostics.
    """

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)
        self.position = position


class FragmentError(PvgError):
    """Raised when a formula uses relations outside the required fragment."""


class NormalizeBudgetError(PvgError):
    """Raised when normal-form computation would exceed its work budget."""


class SolveBudgetError(PvgError):
    """Raised when the game solver exceeds its node budget (inconclusive)."""


class InvalidPlayError(PvgError):
    """Raised when a sequence of transitions is not a legal play."""
