"""Exception hierarchy shared by every module."""

from __future__ import annotations

__all__ = [
    "MdimError",
    "PrecisionBudgetError",
    "ResolutionError",
    "InsufficientDataError",
    "UnsupportedParameterError",
    "FixtureInputError",
    "ConstructionError",
    "PreconditionError",
    "UnknownFixtureError",
]


class MdimError(Exception):
    """Base class for all library errors."""


class PrecisionBudgetError(MdimError):
    """A composition depth exceeds the certified double-precision budget."""

    def __init__(self, horizon: int, budget: int | None, what: str = "system") -> None:
        self.horizon = horizon
        self.budget = budget
        super().__init__(
            f"horizon {horizon} exceeds the certified precision budget "
            f"({budget}) of {what}"
        )


class ResolutionError(MdimError):
    """A sample is too coarse (or too large to build) for the requested radius."""


class InsufficientDataError(MdimError):
    """Not enough horizons or ladder points to form an estimate."""


class UnsupportedParameterError(MdimError):
    """An oracle was asked about parameters outside its closed-form range."""


class FixtureInputError(MdimError, ValueError):
    """A fixture or map received an argument outside its domain."""


class ConstructionError(MdimError, ValueError):
    """A fixture could not be constructed from the given schedules."""


class PreconditionError(MdimError):
    """A relation check precondition (invariance, invertibility) failed."""


class UnknownFixtureError(MdimError, KeyError):
    """The fixture catalogue has no entry with the given id."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else "unknown fixture"
