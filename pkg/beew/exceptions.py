# Exceptions raised by the beew package.

from typing import Optional


class BEEWError(Exception):
    """Base class for every error raised by beew."""


class DomainError(BEEWError, ValueError):
    """An argument or parameter lies outside its mathematical domain."""


class DataError(BEEWError):
    """A data set could not be read or classified.

    Attributes:
        row: The 1-based row the problem was found on, if known
    """

    row: Optional[int]

    def __init__(self, message: str, row: Optional[int] = None) -> None:
        super().__init__(message)
        self.message = message
        self.row = row

    def __str__(self) -> str:
        if self.row is None:
            return self.message
        return f"row {self.row}: {self.message}"


class ConvergenceError(BEEWError):
    """A numerical sub-problem (root finding, inversion, M-step) failed."""


class NestingError(BEEWError):
    """Two models cannot be compared with a likelihood ratio test."""
