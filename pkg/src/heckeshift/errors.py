"""Exception taxonomy shared by all modules.

Exit-code mapping used by the CLI: InputError -> 1, VerificationError -> 2,
InternalConsistencyError -> 3.
"""


class InputError(ValueError):
    """Caller supplied an argument outside an operation's contract."""


class ConfigurationError(InputError):
    """A modulus or basis cannot support the requested transform."""


class CapacityError(InputError):
    """CRT basis capacity is insufficient for the coefficient bound.

    Raised before any computation; the fix is a larger prime basis.
    """


class VerificationError(RuntimeError):
    """An identity suite or cache validation failed; carries a witness."""


class InternalConsistencyError(RuntimeError):
    """Two independent computations of the same object disagree.

    Signals a bug (e.g. in the transform or reconstruction), never bad input.
    """


class DeligneViolationError(InternalConsistencyError):
    """An eigenvalue exceeded its divisor-count majorant beyond float slack."""
