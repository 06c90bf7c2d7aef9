"""Exception hierarchy shared by the solver modules."""


class TripSSQPError(Exception):
    """Base class for all package errors."""


class ConfigError(TripSSQPError, ValueError):
    """Invalid or inconsistent configuration."""


class DatasetError(TripSSQPError):
    """Base class for dataset ingestion failures."""


class CsvParseError(DatasetError, ValueError):
    pass


class EmptyDatasetError(DatasetError, ValueError):
    pass


class LabelError(DatasetError, ValueError):
    """Labels do not map onto exactly two classes."""


class RankError(TripSSQPError, ValueError):
    pass


class SingularConstraintError(TripSSQPError, ArithmeticError):
    """The constraint block A A^T is not numerically positive definite."""


class MeritDivergenceError(TripSSQPError, ArithmeticError):
    """Merit parameter exceeded its safety cap."""


class NonFiniteError(TripSSQPError, ArithmeticError):
    pass


class DomainError(TripSSQPError, ValueError):
    """A slack variable left the positive orthant."""


class StalledError(TripSSQPError, ArithmeticError):
    """A trial step no longer changes the iterate in floating point."""
