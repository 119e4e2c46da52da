"""Numerical sub-Finsler geometry on the Heisenberg group."""
from .errors import (
    CaseMismatch,
    ConvexityViolation,
    DegenerateSegment,
    InsufficientTrace,
    NoConvergence,
    NotClosed,
    ProfileMismatch,
    RootIsolationFailure,
    SingularCoframe,
    StepUnderflow,
    SubFinslerError,
    ZeroMultiplier,
)
from .geodesics import (
    GeodesicState,
    GeodesicTrace,
    IntegratorSettings,
    integrate_geodesic,
    projection_closure,
    theta_period_arclength,
)
from .indicatrix import IndicatrixProfile, check_strong_convexity, rund_average
from .invariants import InvariantTable, heisenberg_table, structure_residual
from .jacobi import JacobiCoefficients, conjugate_points, index, jacobi_coefficients
from .oracle import DiscreteHorizontalPath, dido_direct_search, dido_stationarity, finsler_length

__version__ = "0.1.0"
