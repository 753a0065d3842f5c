"""How well the inner ellipsoid approximates the metric polytope.

Inflation factors (upper bound from the 0/1 corners, lower bound from the
balanced cut), the smallest coordinate over the ellipsoid, the two
tangency points, and sampling audits of containment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .inner import solve_inner
from .outer import outer_radius, shrink_factor
from .pairspace import apply_permutation, num_pairs, pair_arrays, unit
from .polytope import FacetSystem, build_facets, cut_matrix, cut_metric, membership
from .symellipsoid import (
    SymEllipsoid,
    bound_norm_sq,
    inv_norm,
    matvec,
    spectrum,
    triangle_vector,
)

MAX_ENUM_CUT_N = 12
MAX_AUDIT_N = 40
MAX_EXHAUSTIVE_CORNER_DIM = 10
LOWER_CONSTANT = 3**0.75 * sqrt(5 + sqrt(3)) / 6


def dilation_of_point(e: SymEllipsoid, x) -> np.ndarray:
    """Smallest r with x in the ellipsoid inflated by r about its center."""
    return inv_norm(e, np.asarray(x, dtype=float) - e.delta)


def r_upper(e: SymEllipsoid) -> float:
    """sqrt(C(n,2)) * delta / lambda3: covers every 0/1 vector when lambda3 is the smallest eigenvalue and delta >= 1/2."""
    return sqrt(num_pairs(e.n)) * e.delta / spectrum(e).lambda3


def cut_dilation(e: SymEllipsoid, k: int) -> float:
    return float(dilation_of_point(e, cut_metric(e.n, range(1, k + 1)).vector))


def r_lower(e: SymEllipsoid) -> float:
    """Dilation of a cut metric with floor(n/2) vertices on one side."""
    return cut_dilation(e, e.n // 2)


@dataclass
class CutScan:
    n: int
    by_size: dict[int, float]
    argmax_size: int
    max_dilation: float

    @property
    def half_cut_is_max(self) -> bool:
        return self.argmax_size == self.n // 2


def scan_cuts(e: SymEllipsoid) -> CutScan:
    """Dilation of every cut metric, grouped by the size of the smaller side."""
    n = e.n
    if n > MAX_ENUM_CUT_N:
        raise ValueError(f"cut enumeration capped at n={MAX_ENUM_CUT_N}")
    C = cut_matrix(n)
    dil = dilation_of_point(e, C)
    sizes = np.arange(2 ** (n - 1))
    side = np.array([bin(m).count("1") for m in sizes])
    side = np.minimum(side, n - side)
    by_size = {int(k): float(dil[side == k].max()) for k in np.unique(side)}
    k_best = max(by_size, key=by_size.get)
    return CutScan(n, by_size, k_best, float(dil.max()))


def min_distance(e: SymEllipsoid) -> float:
    """min over the ellipsoid of any single coordinate: delta - ||A e12||."""
    return e.delta - sqrt(bound_norm_sq(e))


def min_coordinate_point(e: SymEllipsoid) -> np.ndarray:
    e12 = unit(e.n, 1, 2)
    Ae = matvec(e, e12)
    return e.delta - matvec(e, Ae) / np.linalg.norm(Ae)


def contact_points(e: SymEllipsoid) -> tuple[np.ndarray, np.ndarray]:
    """Tangency points with the facet x_13 <= x_12 + x_23 (p) and with x_12 <= 1 (q)."""
    n = e.n
    t = triangle_vector(n)
    At = matvec(e, t)
    p = e.delta + matvec(e, At) / np.linalg.norm(At)
    Ae = matvec(e, unit(n, 1, 2))
    q = e.delta + matvec(e, Ae) / np.linalg.norm(Ae)
    return p, q


def triangle_image_pattern(e: SymEllipsoid) -> dict[str, np.ndarray]:
    """Coordinates of A t grouped by their role relative to the triangle 1-2-3.

    t has long side 13 and apex 2.  Sides through the apex carry -alpha, the
    long side alpha - 2 beta, other pairs at the apex gamma - 2 beta, and all
    remaining pairs -gamma.
    """
    n = e.n
    At = matvec(e, triangle_vector(n))
    I, J = pair_arrays(n)
    short = ((I == 0) & (J == 1)) | ((I == 1) & (J == 2))
    long_ = (I == 0) & (J == 2)
    apex = ((I == 1) | (J == 1)) & ~short
    rest = ~(short | long_ | apex)
    return {"short": At[short], "long": At[long_], "apex": At[apex], "rest": At[rest]}


@dataclass
class Tangency:
    triangle_slack: float
    bound_slack: float
    p_dilation: float
    q_dilation: float
    p_facet_value: float
    q12: float

    def residual(self) -> float:
        return max(abs(self.p_facet_value), abs(self.q12 - 1), abs(self.p_dilation - 1), abs(self.q_dilation - 1))


def tangency(e: SymEllipsoid, p=None, q=None) -> Tangency:
    if p is None or q is None:
        p, q = contact_points(e)
    t = triangle_vector(e.n)
    return Tangency(
        triangle_slack=float(-(t @ p)),
        bound_slack=float(1 - q[0]),
        p_dilation=float(dilation_of_point(e, p)),
        q_dilation=float(dilation_of_point(e, q)),
        p_facet_value=float(t @ p),
        q12=float(q[0]),
    )


def permuted_contact(e: SymEllipsoid, sigma) -> tuple[np.ndarray, tuple[int, int, int]]:
    """sigma^{-1} applied to p lies on the facet with vertices (sigma(1), sigma(2), sigma(3)).

    With the pull-back action, y = apply_permutation(sigma^{-1}, p) satisfies
    y_{sigma(i) sigma(j)} = p_ij.
    """
    p, _ = contact_points(e)
    s = np.asarray(sigma)
    inv = np.empty_like(s)
    inv[s - 1] = np.arange(1, len(s) + 1)
    return apply_permutation(inv, p), (int(s[0]), int(s[1]), int(s[2]))


@dataclass
class AuditRecord:
    n: int
    samples: int
    seed: int
    min_slack: float
    min_slack_kind: str
    passed: bool
    contact_triangle_slack: float
    contact_bound_slack: float
    rows: list[tuple[int, str, float]] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "samples": self.samples,
            "seed": self.seed,
            "min_slack": self.min_slack,
            "min_slack_kind": self.min_slack_kind,
            "passed": self.passed,
            "contact_triangle_slack": self.contact_triangle_slack,
            "contact_bound_slack": self.contact_bound_slack,
        }


def boundary_samples(e: SymEllipsoid, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Points c + A u with u uniform on the unit sphere."""
    u = rng.standard_normal((samples, num_pairs(e.n)))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return e.delta + matvec(e, u)


def containment_audit(
    e: SymEllipsoid,
    samples: int = 10_000,
    seed: int = 42,
    tol: float = 1e-9,
    fs: FacetSystem | None = None,
    chunk: int = 1000,
) -> AuditRecord:
    """Sample the boundary of the ellipsoid and check every facet.

    The two tangency points are checked as well; random directions almost
    never come close to them once C(n,2) is more than a handful.
    """
    if e.n > MAX_AUDIT_N:
        raise ValueError(f"sampling audit capped at n={MAX_AUDIT_N}")
    fs = fs or build_facets(e.n)
    rng = np.random.default_rng(seed)
    rows = []
    worst = (np.inf, "triangle")
    for start in range(0, samples, chunk):
        X = boundary_samples(e, min(chunk, samples - start), rng)
        S = fs.slacks(X)
        k = S.argmin(axis=1)
        smin = S[np.arange(len(S)), k]
        for r, (kk, sv) in enumerate(zip(k, smin)):
            kind = fs.kind_of(int(kk))
            rows.append((start + r, kind, float(sv)))
            if sv < worst[0]:
                worst = (float(sv), kind)
    p, q = contact_points(e)
    sp = membership(fs, p).min_slack
    sq = membership(fs, q).min_slack
    return AuditRecord(
        n=e.n,
        samples=samples,
        seed=seed,
        min_slack=worst[0],
        min_slack_kind=worst[1],
        passed=bool(min(worst[0], sp, sq) >= -tol),
        contact_triangle_slack=float(sp),
        contact_bound_slack=float(sq),
        rows=rows,
    )


def corner_dilations(e: SymEllipsoid, samples: int = 10_000, seed: int = 42) -> np.ndarray:
    """Dilations of 0/1 vectors: all of them when C(n,2) <= 10, else cuts plus random corners."""
    N = num_pairs(e.n)
    if N <= MAX_EXHAUSTIVE_CORNER_DIM:
        masks = np.arange(2**N)
        X = ((masks[:, None] >> np.arange(N)) & 1).astype(float)
    else:
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 2, size=(samples, N)).astype(float)
        X = np.vstack([np.zeros(N), np.ones(N), X])
        if e.n <= MAX_ENUM_CUT_N:
            X = np.vstack([X, cut_matrix(e.n)])
    return dilation_of_point(e, X)


@dataclass
class SandwichReport:
    n: int
    inner: SymEllipsoid
    outer_radius: float
    shrink_factor: float
    r_upper: float
    r_lower: float
    min_distance: float
    contact_triangle: np.ndarray
    contact_bound: np.ndarray
    kkt_residual: float
    tangency: Tangency
    audit: AuditRecord | None = None
    cut_scan: CutScan | None = None

    def to_json(self) -> dict:
        d = {
            "n": self.n,
            "inner": self.inner.to_json(),
            "outer_radius": self.outer_radius,
            "shrink_factor": self.shrink_factor,
            "r_upper": self.r_upper,
            "r_lower": self.r_lower,
            "min_distance": self.min_distance,
            "contact_triangle": self.contact_triangle.tolist(),
            "contact_bound": self.contact_bound.tolist(),
            "kkt_residual": self.kkt_residual,
            "tangency_residual": self.tangency.residual(),
        }
        if self.audit is not None:
            d["audit"] = self.audit.to_json()
        if self.cut_scan is not None:
            d["half_cut_is_max"] = self.cut_scan.half_cut_is_max
            d["max_cut_dilation"] = self.cut_scan.max_dilation
        return d

    @classmethod
    def from_json(cls, d: dict) -> SandwichReport:
        e = SymEllipsoid.from_json(d["inner"])
        p = np.array(d["contact_triangle"], dtype=float)
        q = np.array(d["contact_bound"], dtype=float)
        return cls(
            n=int(d["n"]),
            inner=e,
            outer_radius=float(d["outer_radius"]),
            shrink_factor=float(d["shrink_factor"]),
            r_upper=float(d["r_upper"]),
            r_lower=float(d["r_lower"]),
            min_distance=float(d["min_distance"]),
            contact_triangle=p,
            contact_bound=q,
            kkt_residual=float(d["kkt_residual"]),
            tangency=tangency(e, p, q),
        )


def sandwich_report(
    n: int,
    tol: float = 1e-10,
    max_iter: int = 500,
    samples: int = 10_000,
    seed: int = 42,
    audit: bool = True,
) -> SandwichReport:
    res = solve_inner(n, tol, max_iter)
    e = res.e
    p, q = contact_points(e)
    return SandwichReport(
        n=n,
        inner=e,
        outer_radius=outer_radius(n),
        shrink_factor=shrink_factor(n),
        r_upper=r_upper(e),
        r_lower=r_lower(e),
        min_distance=min_distance(e),
        contact_triangle=p,
        contact_bound=q,
        kkt_residual=res.kkt_residual,
        tangency=tangency(e, p, q),
        audit=containment_audit(e, samples, seed) if audit and n <= MAX_AUDIT_N else None,
        cut_scan=scan_cuts(e) if n <= MAX_ENUM_CUT_N else None,
    )
