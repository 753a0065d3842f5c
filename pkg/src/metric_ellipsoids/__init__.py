"""Inner and outer Loewner-John ellipsoids of the metric polytope."""

from .inner import SolveResult, SolverError, solve_inner
from .oracle import GeneralEllipsoid, OracleError, solve_mve
from .outer import john_certificate, outer_radius, shrink_factor
from .polytope import FacetSystem, build_facets, cut_metric, membership
from .sandwich import SandwichReport, sandwich_report
from .symellipsoid import SymEllipsoid, matvec, spectrum

__all__ = [
    "FacetSystem",
    "GeneralEllipsoid",
    "OracleError",
    "SandwichReport",
    "SolveResult",
    "SolverError",
    "SymEllipsoid",
    "build_facets",
    "cut_metric",
    "john_certificate",
    "matvec",
    "membership",
    "outer_radius",
    "sandwich_report",
    "shrink_factor",
    "solve_inner",
    "solve_mve",
    "spectrum",
]
