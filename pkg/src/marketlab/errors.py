"""Exception types shared across the package."""


class MarketLabError(Exception):
    """Base class for all marketlab errors."""


class InvalidInputError(MarketLabError, ValueError):
    """A caller supplied an argument outside the documented domain."""


class NotWarmedUpError(MarketLabError):
    """An operation needs more realized history bits than are available."""


class SeriesParseError(MarketLabError):
    """A price-series file could not be parsed.

    Carries the 1-based line number of the first offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NewsLoadError(MarketLabError):
    """A news file is malformed or too short for the session."""


class ReplayError(MarketLabError):
    """A session log is truncated or inconsistent and cannot be replayed."""
