"""Exception types shared across the package."""


class PendencyError(Exception):
    """Base class for data and contract violations raised by this package."""


class SchemaError(PendencyError):
    """Input file does not match the expected column schema."""


class DataError(PendencyError):
    """Values violate an operation's contract (bad dates, labels, shapes...)."""


class NotFittedError(PendencyError):
    """An encoder or model was used before fitting."""


class SearchBudgetError(PendencyError):
    """No search trial completed within the given budget.

    Carries whatever partial leaderboard exists in ``leaderboard``.
    """

    def __init__(self, message, leaderboard=None):
        super().__init__(message)
        self.leaderboard = list(leaderboard or [])
