"""Superconnection Chern forms on the SO(n,2) period domain and their lattice theta series."""
from .errors import (
    DecompositionError,
    GeometryInconsistencyError,
    InvalidArgument,
    NearLocusError,
    OutsideDomainError,
    ResolutionError,
    SuperthetaError,
    TruncationError,
)
from .exterior import GradedForm, wedge
from .geometry import Chart, DomainPoint, Jet2, base_point
from .quadlattice import DiscGroup, Lattice, QuadraticSpace, discriminant_group, enumerate_ball
from .superalg import SuperFiber, SuperOperator, mul, super_exp, supertrace
from .theta import ThetaValue, theta_form, theta_siegel_scalar

__version__ = "0.1.0"

__all__ = [
    "Chart", "DecompositionError", "DiscGroup", "DomainPoint", "GeometryInconsistencyError",
    "GradedForm", "InvalidArgument", "Jet2", "Lattice", "NearLocusError", "OutsideDomainError",
    "QuadraticSpace", "ResolutionError", "SuperFiber", "SuperOperator", "SuperthetaError",
    "ThetaValue", "TruncationError", "base_point", "discriminant_group", "enumerate_ball", "mul",
    "super_exp", "supertrace", "theta_form", "theta_siegel_scalar", "wedge",
]
