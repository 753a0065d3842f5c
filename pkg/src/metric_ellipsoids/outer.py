"""Smallest enclosing ellipsoid of the metric polytope and its John certificate.

The enclosing ellipsoid is the ball of radius sqrt(C(n,2))/2 around the
all-1/2 point.  Minimality is certified by contact points at the cut
metrics: after recentering and rescaling, the cut vectors u_S = (2 delta(S) - 1)/sqrt(C(n,2))
are unit vectors, and with equal weights C(n,2)/#cuts they satisfy
sum w u = 0 and sum w u u^T = I.

The zero cut has to be part of the family.  Every coordinate is separated
by exactly half of the 2^(n-1) cuts only when delta(emptyset) is counted;
without it the weighted sum of contact points is nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, sqrt

import numpy as np

from .oracle import GeneralEllipsoid
from .pairspace import num_pairs
from .polytope import bound, build_facets, cut_matrix, triangle

MAX_JOHN_N = 16
CERT_TOL = 1e-12
FULL_FACET_N = 60


def outer_radius(n: int) -> float:
    return 0.5 * sqrt(comb(n, 2))


def outer_ball(n: int) -> GeneralEllipsoid:
    if n < 3:
        raise ValueError("need n >= 3")
    N = num_pairs(n)
    return GeneralEllipsoid(outer_radius(n) * np.eye(N), np.full(N, 0.5))


@dataclass
class JohnCertificate:
    n: int
    contact_points: np.ndarray
    weights: np.ndarray
    barycenter_residual: float
    identity_residual: float
    include_trivial: bool = True

    @property
    def num_contacts(self) -> int:
        return len(self.weights)

    @property
    def weight(self) -> float:
        return float(self.weights[0])

    def valid(self, tol: float = CERT_TOL) -> bool:
        norms_ok = np.allclose(np.linalg.norm(self.contact_points, axis=1), 1.0, rtol=0, atol=tol)
        return bool(
            norms_ok
            and self.barycenter_residual <= tol
            and self.identity_residual <= tol
            and self.num_contacts >= num_pairs(self.n)
            and np.all(self.weights > 0)
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "num_contacts": self.num_contacts,
            "lambda": self.weight,
            "barycenter_residual": self.barycenter_residual,
            "identity_residual": self.identity_residual,
        }


def john_certificate(n: int, include_trivial: bool = True) -> JohnCertificate:
    """Cut-metric contact points with equal weights, and their residuals.

    ``include_trivial=False`` drops the zero cut and rescales the weights to
    C(n,2)/(2^(n-1) - 1); it is only there to show that the certificate then
    fails.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if n > MAX_JOHN_N:
        raise ValueError(f"John certificate enumerates 2^(n-1) cuts; n is capped at {MAX_JOHN_N}")
    N = num_pairs(n)
    cuts = cut_matrix(n)
    if not include_trivial:
        cuts = cuts[1:]
    U = (2.0 * cuts - 1.0) / sqrt(N)
    w = np.full(len(U), N / len(U))
    bary = w @ U
    gram = (U * w[:, None]).T @ U
    return JohnCertificate(
        n=n,
        contact_points=U,
        weights=w,
        barycenter_residual=float(np.max(np.abs(bary))),
        identity_residual=float(np.max(np.abs(gram - np.eye(N)))),
        include_trivial=include_trivial,
    )


def facet_distances(n: int, point=None) -> tuple[float, float]:
    """Smallest Euclidean distance from ``point`` (default all-1/2) to a triangle facet and to a bound facet."""
    fs = build_facets(n)
    x = np.full(fs.dim, 0.5) if point is None else np.asarray(point, dtype=float)
    s = fs.slacks(x)
    tri = s[: fs.num_triangles] / sqrt(3.0)
    bnd = s[fs.num_triangles:]
    return float(tri.min()), float(bnd.min())


def centered_inscribed_ball(n: int) -> float:
    """Radius of the largest ball around the all-1/2 point inside the polytope."""
    if n < 3:
        raise ValueError("need n >= 3")
    if n <= FULL_FACET_N:
        return min(facet_distances(n))
    # the center is S_n-invariant, so one facet per family suffices
    tri = triangle(n, 1, 2, 3)
    bnd = bound(n, 1, 2)
    dist = [(c.b - 0.5 * sum(c.a.values())) / sqrt(sum(v * v for v in c.a.values())) for c in (tri, bnd)]
    return min(dist)


def shrink_factor(n: int) -> float:
    return outer_radius(n) / centered_inscribed_ball(n)
