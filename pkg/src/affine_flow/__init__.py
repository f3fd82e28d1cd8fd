"""Affine motions of compressible and incompressible fluid ellipsoids in vacuum."""

from .dynamics import (
    Compressible,
    Incompressible,
    IntegratorConfig,
    PhaseState,
    Trajectory,
    comp_energy,
    comp_rhs,
    curvature,
    incomp_lambda,
    incomp_rhs,
    integrate,
    velocity_gradient,
)
from .errors import AffineFlowError
from .geometry import ShapeLabel, classify_asymptotic, ellipsoid_of
from .scattering import (
    AsymptoticState,
    DegreeData,
    degree_exponents,
    extract_asymptote,
    scattering_map,
    solve_cauchy_at_infinity,
    wave_operator,
)
from .swirl import SwirlState, embed, integrate_swirl

__version__ = "0.1.0"

__all__ = [
    "AffineFlowError",
    "AsymptoticState",
    "Compressible",
    "DegreeData",
    "Incompressible",
    "IntegratorConfig",
    "PhaseState",
    "ShapeLabel",
    "SwirlState",
    "Trajectory",
    "classify_asymptotic",
    "comp_energy",
    "comp_rhs",
    "curvature",
    "degree_exponents",
    "ellipsoid_of",
    "embed",
    "extract_asymptote",
    "incomp_lambda",
    "incomp_rhs",
    "integrate",
    "integrate_swirl",
    "scattering_map",
    "solve_cauchy_at_infinity",
    "velocity_gradient",
    "wave_operator",
]
