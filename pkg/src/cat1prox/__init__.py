"""Convex minimization on admissible CAT(1) spaces with the tan-sin resolvent."""
from .algorithms import Schedule, run_halpern, run_mann, run_ppa
from .catk import KappaSpace
from .errors import (Cat1ProxError, ConvergenceError, DegenerateGeodesicError, DomainError,
                     InvalidInputError)
from .functions import IndicatorBall, MaxNegCos, NegCosDistance, Sum, WeightedNegCos
from .geometry import AdmissibleSpace, distance, interpolate, make_point
from .resolvent import solve

__version__ = "0.1.0"
