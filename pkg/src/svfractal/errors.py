"""Exception hierarchy shared by every svfractal module."""


class SVFractalError(Exception):
    """Base class for all library errors."""


class EmptySet(SVFractalError, ValueError):
    pass


class CapacityExceeded(SVFractalError):
    """A representation budget (interval count, grid size, cloud size) was hit."""


class DomainError(SVFractalError, ValueError):
    pass


class ConvexityRequired(SVFractalError, ValueError):
    pass


class IncompatibleBase(SVFractalError, ValueError):
    """Base function violates the endpoint condition S(u_1)-F(u_1) = S(u_N)-F(u_N)."""


class NoConvergence(SVFractalError):
    pass


class EndpointNotSingleton(SVFractalError, ValueError):
    pass


class OrderViolated(SVFractalError, ValueError):
    pass


class DegreeCapExceeded(SVFractalError):
    pass


class DegenerateFit(SVFractalError, ValueError):
    pass


class PointNotOnGrid(SVFractalError, KeyError):
    pass
