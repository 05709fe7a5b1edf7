"""Numerical checks of curvature identities for the natural connection with
totally skew-symmetric torsion on almost complex manifolds with Norden metric."""

from .connections import NaturalConnection, build_natural_connection
from .curvature import IdentityReport, full_identity_report
from .factory import GeneratorConfig, filtered_search, flat_kahler, gl_orbit_chart, nilpotent_w3
from .fileformats import GeometrySpec, read_spec, write_spec
from .geometry import GeometryJet, jet_from_chart, jet_from_lie

__all__ = [
    "NaturalConnection",
    "build_natural_connection",
    "IdentityReport",
    "full_identity_report",
    "GeneratorConfig",
    "filtered_search",
    "flat_kahler",
    "gl_orbit_chart",
    "nilpotent_w3",
    "GeometrySpec",
    "read_spec",
    "write_spec",
    "GeometryJet",
    "jet_from_chart",
    "jet_from_lie",
]
