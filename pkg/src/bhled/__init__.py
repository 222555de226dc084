"""Numerical laboratory for Maxwell fields on spherically symmetric black holes.

The package reduces a Maxwell field on a stationary spherically symmetric
black-hole background to charge transport for the spherical sector plus one
spin-zero wave equation per spherical-harmonic mode, evolves those, and
measures local-energy-decay estimates, geometric identities, and weighted
Hardy/trace inequalities on the results.
"""

__version__ = "0.1.0"

from .grids import RadialGrid
from .metrics import MetricModel, schwarzschild, reissner_nordstrom, tabulated
from .geometry import (
    GeometryProfile,
    build_profile,
    check_axioms,
    find_horizon,
    find_trapped_set,
    regge_wheeler_map,
)
from .frames import NullFrame, build_null_frame, deformation_tensors

__all__ = [
    "RadialGrid",
    "MetricModel",
    "schwarzschild",
    "reissner_nordstrom",
    "tabulated",
    "GeometryProfile",
    "build_profile",
    "check_axioms",
    "find_horizon",
    "find_trapped_set",
    "regge_wheeler_map",
    "NullFrame",
    "build_null_frame",
    "deformation_tensors",
]
