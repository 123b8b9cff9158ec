"""Exception types raised across the package."""


class QuasipertError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(QuasipertError, ValueError):
    pass


class InteriorIndexError(QuasipertError, IndexError):
    """Index outside the trusted interior block of a truncated basis."""


class DegreeError(QuasipertError, ValueError):
    """Polynomial exceeds the supported degree."""


class ImpulsiveFieldError(QuasipertError, ValueError):
    """A time derivative would produce a delta-function contribution."""


class InadmissibleObservableError(QuasipertError, ValueError):
    pass


class UndefinedEntryError(QuasipertError, KeyError):
    pass


class NumericalPolicyError(QuasipertError, ValueError):
    """A step size or resolution policy was violated.

    Parameters
    ----------
    policy : str
        Short name of the violated policy.
    message : str
        Human readable explanation.
    """

    def __init__(self, policy, message):
        super().__init__(f"[{policy}] {message}")
        self.policy = policy


class ConfigError(QuasipertError, ValueError):
    def __init__(self, field, reason):
        super().__init__(f"config field '{field}': {reason}")
        self.field = field
        self.reason = reason
