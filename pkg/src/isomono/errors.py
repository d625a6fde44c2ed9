"""Exception hierarchy.

Every numerical failure derives from :class:`NumericalFailure` so the CLI can
map it to exit code 3; input problems derive from :class:`InputError`.
"""


class IsomonoError(Exception):
    """Base class for all package errors."""


class InputError(IsomonoError, ValueError):
    """Malformed or inconsistent input data."""


class NumericalFailure(IsomonoError, ArithmeticError):
    """A computation could not be completed to the requested accuracy."""


class PoleEvaluation(InputError):
    pass


class DegenerateResidue(InputError):
    pass


class InconsistentRow(InputError):
    pass


class ClearanceViolation(InputError):
    pass


class StepUnderflow(NumericalFailure):
    pass


class PointCollision(NumericalFailure):
    pass


class DegenerateInfinity(NumericalFailure):
    pass


class DegenerateConfiguration(NumericalFailure):
    pass


class SingularLinearSystem(NumericalFailure):
    pass


class ResidueMismatch(NumericalFailure):
    pass


class ResidueCheckFailed(NumericalFailure):
    pass


class NonInvariantDirection(NumericalFailure):
    pass


class NumericalNoise(NumericalFailure):
    pass


class ChartMismatch(NumericalFailure):
    pass


class UndefinedCrossRatio(InputError):
    pass


class DegeneratePoles(InputError):
    pass
