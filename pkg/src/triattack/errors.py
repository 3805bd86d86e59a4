"""Exception types shared across the toolkit."""


class TriattackError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(TriattackError, ValueError):
    """An array does not have the required shape."""


class ParameterError(TriattackError, ValueError):
    """A value is outside its allowed range."""


class DegeneratePlaneError(TriattackError):
    """The sampled direction is parallel to the adversary direction; the
    caller must resample."""


class InfeasibleAngleError(TriattackError):
    """The angle-bound interval collapsed (lo >= hi); indicates corrupted
    angle state."""


class InitializationError(TriattackError):
    """No adversarial starting point was found within the resample budget."""


class BudgetExhausted(TriattackError):
    """The query budget is spent; the attack must stop with partial results."""


class OracleUnavailable(TriattackError):
    """A remote oracle could not produce a label (transport failure,
    non-200 status, or malformed response)."""
