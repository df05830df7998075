"""Exception hierarchy shared by the samplers, engine and CLI."""


class HdpLtError(Exception):
    """Base class for all package errors."""


class ParameterError(HdpLtError, ValueError):
    """An argument violates a documented precondition."""


class IntegrityError(HdpLtError):
    """A model invariant was violated (e.g. a non-concave ARS target)."""


class NumericError(HdpLtError, ArithmeticError):
    """Underflow, singular matrices or other numerical breakdowns."""


class DivergenceError(NumericError):
    """A leapfrog trajectory hit a non-finite gradient or energy."""


class InputError(HdpLtError, ValueError):
    """Observations or files that do not match the model's expectations."""


class CheckpointError(HdpLtError):
    """A checkpoint could not be read back."""


class ChecksumError(CheckpointError):
    """Checkpoint payload does not match its stored digest."""


class MigrationError(CheckpointError):
    """Checkpoint schema version is not supported by this build."""
