"""Exception hierarchy.

Everything a numeric guard can raise derives from :class:`GuardViolation`,
which the CLI maps to exit code 3.
"""


class DwpfError(Exception):
    pass


class InvalidContext(DwpfError, ValueError):
    pass


class SizeLimit(DwpfError, ValueError):
    pass


class GuardViolation(DwpfError, ArithmeticError):
    """A numeric guard rejected the inputs."""


class SeriesDivergence(GuardViolation):
    pass


class DynamicalPole(GuardViolation):
    pass


class BoundaryPole(GuardViolation):
    pass


class GenericPositionViolation(GuardViolation):
    pass


class PoleAtEvaluation(GuardViolation):
    pass


class ReflectionPole(GuardViolation):
    pass
