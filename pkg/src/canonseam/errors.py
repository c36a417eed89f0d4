"""Exception hierarchy shared by all modules.

Numerical breakdowns derive from :class:`NumericalError` so that the CLI can
map them to a distinct exit status.
"""


class CanonSeamError(Exception):
    """Base class for every error raised by the package."""


class InvalidInput(CanonSeamError, ValueError):
    pass


class OutOfDomain(CanonSeamError, ValueError):
    pass


class InvalidPerturbation(CanonSeamError, ValueError):
    """A parameter vector leaves the positivity margin of the Hamiltonian."""


class NumericalError(CanonSeamError, ArithmeticError):
    pass


class SingularMatrix(NumericalError):
    pass


class DenominatorCollapse(NumericalError):
    """``D - iB`` (or its rotated analogue) is numerically zero."""


class RankDeficientJacobian(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class ConstructionError(NumericalError):
    pass


class NearPole(NumericalError):
    pass
