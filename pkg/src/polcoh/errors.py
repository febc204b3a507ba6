"""Exception and warning types for polcoh."""


class PolcohError(Exception):
    """Base class for every error raised by polcoh."""


class InputError(PolcohError, ValueError):
    """The caller handed in something that cannot be used."""


class DimensionError(InputError):
    """Array shape or photon number does not match."""


class NormalizationError(InputError):
    """A state cannot be normalized or is not normalized."""


class UnitarityError(InputError):
    """A mode transformation is not a 2x2 unitary."""


class SymmetryError(InputError):
    """A coherence tensor is not Hermitian."""


class RangeError(InputError):
    """A parameter lies outside its supported range."""


class PlanMismatchError(InputError):
    """Measurement records do not cover the settings plan."""


class DocumentError(InputError):
    """A JSON document is malformed or of the wrong kind."""


class ConfigError(InputError):
    """The configuration file holds an invalid value."""


class NumericalError(PolcohError, ArithmeticError):
    """A computation failed for numerical reasons."""


class SingularSystemError(NumericalError):
    """A linear system is singular to working precision."""


class NormalizationWarning(UserWarning):
    """An estimated density matrix has a trace far from one."""


class PositivityWarning(UserWarning):
    """An estimated density matrix has a negative eigenvalue."""
