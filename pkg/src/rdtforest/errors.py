"""Exception hierarchy.

Two base classes so the CLI can map failures to exit codes: ``ConfigError``
for bad parameters or misuse of the API (exit code 2) and ``DataError`` for
problems with input data (exit code 3).
"""


class RdtError(Exception):
    """Base class for all package errors."""


class ConfigError(RdtError):
    """Invalid parameter or invalid use of the API."""

    exit_code = 2


class DataError(RdtError):
    """Problem with input data."""

    exit_code = 3


# --- data loading ---------------------------------------------------------

class ParseError(DataError):
    """Malformed input file; message carries row/column position."""


class SchemaViolation(DataError):
    """A value falls outside its attribute's declared [min, max] range."""


class UnknownLabel(DataError):
    """A label token is not covered by the declared label mapping."""


class IndexOutOfOrder(DataError):
    """Sparse-format feature indices are not strictly ascending."""


class TooFewPoints(DataError):
    """Dataset too small to split."""


# --- model lifecycle ------------------------------------------------------

class AlreadyTrained(ConfigError):
    """Attempt to train a forest that already holds leaf statistics."""


class Untrained(ConfigError):
    """Attempt to classify with a forest that has no leaf statistics."""


class AlreadyPrivate(ConfigError):
    """Attempt to perturb a forest twice (would double-spend the budget)."""


# --- parameter validation -------------------------------------------------

class BadDelta(ConfigError):
    """Margin parameter outside (0, 1/2)."""


class BadRate(ConfigError):
    """Non-positive noise rate."""


class BadEta(ConfigError):
    """Non-positive privacy budget."""


class NotAdjacent(ConfigError):
    """The two datasets do not differ in exactly one point."""


class SpaceTooLarge(ConfigError):
    """Exhaustive tree-space enumeration would exceed the configured cap."""


class DomainError(ConfigError):
    """Bound formula input outside its mathematical domain."""


class EmptyInput(ConfigError):
    """An operation that needs at least one element got none."""
