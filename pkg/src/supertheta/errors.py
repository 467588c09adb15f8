"""Exception hierarchy shared by all modules."""


class SuperthetaError(Exception):
    pass


class InvalidArgument(SuperthetaError, ValueError):
    pass


class DecompositionError(SuperthetaError, ValueError):
    """The degree-0 part of an operator is not a scalar multiple of the identity."""


class OutsideDomainError(SuperthetaError, ValueError):
    """A chart point where Q(w, conj w) >= 0."""


class GeometryInconsistencyError(SuperthetaError, ArithmeticError):
    pass


class NearLocusError(SuperthetaError, ValueError):
    """The s_v-trivialized formula was asked for a point too close to the Hodge locus."""


class TruncationError(SuperthetaError, RuntimeError):
    def __init__(self, message, radius=None, tail=None, npoints=None):
        super().__init__(message)
        self.radius = radius
        self.tail = tail
        self.npoints = npoints


class ResolutionError(SuperthetaError, RuntimeError):
    """Quadrature aliasing: the coefficient moved when the sample count doubled."""
