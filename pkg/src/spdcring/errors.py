"""Exception hierarchy. Each class maps to one CLI exit code."""


class SpdcError(Exception):
    exit_code = 1


class ValidationError(SpdcError, ValueError):
    """Bad input: out-of-range parameters, malformed configuration."""

    exit_code = 1


class AccuracyError(SpdcError, ArithmeticError):
    """A numerical result failed its own accuracy bookkeeping."""

    exit_code = 2


class StiffnessError(AccuracyError):
    """Adaptive step size collapsed below the representable minimum."""


class ResourceError(SpdcError):
    """Requested problem size exceeds a configured cap."""

    exit_code = 3
