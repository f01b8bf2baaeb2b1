"""Exact and numerical tools for Hessian measures of subelliptic k-convex functions."""

__version__ = "0.1.0"

from .sympoly import Polynomial, random_polynomial
from .fields import FieldSystem, VectorField, builtin, check_conditions, engel, euclidean, heisenberg
from .hessian import f2_family, f2_star, full_hessian, is_k_convex, laplacians, sigma_j
from .identities import (
    IdentityResult,
    RejectedInput,
    monotonicity_gap,
    verify_divergence_identity,
    verify_maclaurin_chain,
    verify_p_subharmonicity,
)
from .measures import Cutoff, Domain, GridFunction, mollify, pairing, weak_continuity_experiment
from .geometry import ball_volume, cc_distance, exponent_report, homogeneous_dimension

__all__ = [
    "Polynomial", "random_polynomial", "FieldSystem", "VectorField", "builtin", "check_conditions",
    "engel", "euclidean", "heisenberg", "f2_family", "f2_star", "full_hessian", "is_k_convex",
    "laplacians", "sigma_j", "IdentityResult", "RejectedInput", "monotonicity_gap",
    "verify_divergence_identity", "verify_maclaurin_chain", "verify_p_subharmonicity", "Cutoff",
    "Domain", "GridFunction", "mollify", "pairing", "weak_continuity_experiment", "ball_volume",
    "cc_distance", "exponent_report", "homogeneous_dimension",
]
