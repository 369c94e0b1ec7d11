"""Exception types shared across the package."""

from __future__ import annotations


class FungenError(Exception):
    """Base class for all package-specific errors."""


class ParseError(FungenError, ValueError):
    """Malformed input file; carries the offending line number in the message."""


class ValidationError(FungenError, ValueError):
    """Structurally valid input that violates a data-model invariant."""


class ConfigError(FungenError, ValueError):
    """Bad configuration value; message names the offending field path."""


class DomainError(FungenError, ValueError):
    """Function evaluated outside its declared domain.

    ``day`` names the trading-grid index when the violation occurred along a
    path rather than at a single evaluation.
    """

    def __init__(self, message: str, day: int | None = None):
        super().__init__(message)
        self.day = day


class StrategyError(FungenError, RuntimeError):
    """Backtest failure; carries the failing day index when applicable."""

    def __init__(self, message: str, day: int | None = None, ledger=None):
        super().__init__(message)
        self.day = day
        self.ledger = ledger


class SimulationError(FungenError, RuntimeError):
    """Scenario generation could not satisfy its post-condition."""
