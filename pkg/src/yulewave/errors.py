"""Exception hierarchy shared by every module.

Each class carries the process exit status the command line reports for it.
"""


class YuleWaveError(Exception):
    exit_code = 1


class DomainError(YuleWaveError, ValueError):
    """An argument lies outside the domain of the formula."""


class StateError(YuleWaveError):
    """An object is in a state where the operation is undefined."""


class RangeError(YuleWaveError, ValueError):
    """A table or window does not cover the requested range."""


class AlignmentError(YuleWaveError, ValueError):
    """A grid does not align with the integer lattice."""


class AccuracyError(YuleWaveError):
    """A numerical self-check failed."""


class PreconditionError(YuleWaveError, ValueError):
    """A caller-declared assumption is contradicted by the data."""


class ConvergenceError(YuleWaveError):
    """A Monte Carlo quantity has not stabilised at the requested horizon."""


class ResourceError(YuleWaveError):
    """A run would exceed a configured particle or node cap."""

    exit_code = 2


class VerificationFailure(YuleWaveError):
    """A statistical gate did not pass."""

    exit_code = 3
