"""Exception hierarchy shared by all modules."""


class GCRFError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(GCRFError, ValueError):
    """Shapes of parameters and instances do not agree."""


class DataError(GCRFError, ValueError):
    """Input data violates a domain invariant (non-finite values, bad labels...)."""


class DefinitenessError(GCRFError):
    """A precision matrix could not be Cholesky-factorized.

    Usually means a weight sits at or below the positivity floor.
    """


class ConditioningError(GCRFError):
    """A numerically impossible quantity appeared (e.g. negative variance)."""


class UndefinedMetricError(GCRFError, ValueError):
    """The metric is undefined for the given input (e.g. single-class labels)."""


class ParseError(GCRFError, ValueError):
    """A dataset or model file could not be parsed or validated."""
