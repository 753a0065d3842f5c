"""Facets of the metric polytope, membership, cut metrics and vertex checks.

The polytope is cut out by the triangle inequalities x_ik <= x_ij + x_jk and
the diameter bounds x_ij <= 1.  Nonnegativity is implied by the triangle
inequalities and is not listed as a facet.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb
from typing import NamedTuple

import numpy as np

from .pairspace import as_pair_vector, flatten, index_matrix, num_pairs, pair_arrays

TOL_MEMBERSHIP = 1e-9
TOL_ACTIVE = 1e-7
MAX_CUT_N = 20


@dataclass(frozen=True)
class LinearConstraint:
    """a . x <= b.

    ``kind`` is "triangle" with ``indices`` (i, j, k) meaning
    x_ik - x_ij - x_jk <= 0, or "bound" with ``indices`` (i, j) meaning
    x_ij <= 1.
    """

    kind: str
    indices: tuple[int, ...]
    a: dict[int, float]
    b: float

    def normal(self, n: int) -> np.ndarray:
        v = np.zeros(num_pairs(n))
        for k, coeff in self.a.items():
            v[k] = coeff
        return v

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "indices": list(self.indices),
            "a": {str(k): v for k, v in self.a.items()},
            "b": self.b,
        }

    @classmethod
    def from_json(cls, d: dict) -> LinearConstraint:
        return cls(d["kind"], tuple(d["indices"]), {int(k): float(v) for k, v in d["a"].items()}, float(d["b"]))


def triangle(n: int, i: int, j: int, k: int) -> LinearConstraint:
    """x_ik - x_ij - x_jk <= 0: the side ik is bounded by the path through j."""
    a = {flatten(n, i, k): 1.0, flatten(n, i, j): -1.0, flatten(n, j, k): -1.0}
    return LinearConstraint("triangle", (i, j, k), a, 0.0)


def bound(n: int, i: int, j: int) -> LinearConstraint:
    return LinearConstraint("bound", (i, j), {flatten(n, i, j): 1.0}, 1.0)


@dataclass(frozen=True)
class FacetSystem:
    """All facets of the metric polytope for a given n.

    Triangles are stored as flat-index triples (long, side, side) so slacks
    can be evaluated without materialising the constraint matrix.  Triangles
    come first (three per vertex triple i<j<k, long sides ik, ij, jk), then
    the C(n, 2) bounds in flat order.
    """

    n: int
    tri_vertices: np.ndarray = field(repr=False)
    tri_flat: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return num_pairs(self.n)

    @property
    def num_triangles(self) -> int:
        return len(self.tri_flat)

    def __len__(self) -> int:
        return self.num_triangles + self.dim

    @cached_property
    def constraints(self) -> list[LinearConstraint]:
        out = [triangle(self.n, *map(int, v)) for v in self.tri_vertices]
        I, J = pair_arrays(self.n)
        out += [bound(self.n, int(i) + 1, int(j) + 1) for i, j in zip(I, J)]
        return out

    def kind_of(self, index: int) -> str:
        return "triangle" if index < self.num_triangles else "bound"

    def slacks(self, x) -> np.ndarray:
        """b - a.x for every constraint, batched over leading axes of x."""
        x = as_pair_vector(x, self.n)
        L, P, Q = self.tri_flat.T
        tri = x[..., P] + x[..., Q] - x[..., L]
        return np.concatenate([tri, 1.0 - x], axis=-1)

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Constraint matrix and right-hand side, rows in facet order."""
        m = len(self)
        A = np.zeros((m, self.dim))
        rows = np.arange(self.num_triangles)
        L, P, Q = self.tri_flat.T
        A[rows, L] = 1.0
        A[rows, P] = -1.0
        A[rows, Q] = -1.0
        A[self.num_triangles + np.arange(self.dim), np.arange(self.dim)] = 1.0
        b = np.concatenate([np.zeros(self.num_triangles), np.ones(self.dim)])
        return A, b

    def to_json(self) -> dict:
        return {"n": self.n, "constraints": [c.to_json() for c in self.constraints]}

    @classmethod
    def from_json(cls, d: dict) -> FacetSystem:
        n = int(d["n"])
        cons = [LinearConstraint.from_json(c) for c in d["constraints"]]
        fs = build_facets(n)
        if fs.constraints != cons:
            raise ValueError("constraint list is not the canonical facet system of the metric polytope")
        return fs


def _from_triangles(n: int, tv: np.ndarray) -> FacetSystem:
    F = index_matrix(n)
    i, j, k = (tv - 1).T
    tri_flat = np.stack([F[i, k], F[i, j], F[j, k]], axis=1)
    return FacetSystem(n, tv, tri_flat)


def build_facets(n: int) -> FacetSystem:
    if n < 3:
        raise ValueError("the metric polytope needs n >= 3")
    triples = np.array(list(combinations(range(1, n + 1), 3)), dtype=np.intp)
    i, j, k = triples.T
    # per triple: long side ik (apex j), ij (apex k), jk (apex i)
    tv = np.stack([np.stack([i, j, k], 1), np.stack([i, k, j], 1), np.stack([j, i, k], 1)], axis=1)
    fs = _from_triangles(n, tv.reshape(-1, 3))
    assert fs.num_triangles == 3 * comb(n, 3)
    return fs


class Membership(NamedTuple):
    inside: bool
    worst_violation: float
    min_slack: float
    argmin: int


def membership(fs: FacetSystem, x, tol: float = TOL_MEMBERSHIP) -> Membership:
    s = fs.slacks(x)
    if s.ndim != 1:
        raise ValueError("membership takes a single point; use FacetSystem.slacks for batches")
    k = int(np.argmin(s))
    return Membership(bool(s[k] >= -tol), float(-s[k]), float(s[k]), k)


@dataclass(frozen=True)
class CutMetric:
    """delta(S): 1 on pairs separated by S, 0 elsewhere. S never contains 1."""

    n: int
    S: frozenset[int]

    @cached_property
    def vector(self) -> np.ndarray:
        member = np.zeros(self.n, dtype=bool)
        member[[v - 1 for v in self.S]] = True
        I, J = pair_arrays(self.n)
        return (member[I] != member[J]).astype(float)


def cut_metric(n: int, S) -> CutMetric:
    S = frozenset(int(v) for v in S)
    if any(not 1 <= v <= n for v in S):
        raise ValueError(f"cut side {sorted(S)} is not a subset of [1, {n}]")
    if 1 in S:
        S = frozenset(range(1, n + 1)) - S
    return CutMetric(n, S)


def all_cuts(n: int) -> list[CutMetric]:
    """All 2^(n-1) cut metrics, the zero cut first, ordered by bitmask over vertices 2..n."""
    if n > MAX_CUT_N:
        raise ValueError(f"refusing to enumerate 2^{n - 1} cuts (n > {MAX_CUT_N})")
    if n < 2:
        raise ValueError("need n >= 2")
    out = []
    for mask in range(2 ** (n - 1)):
        S = frozenset(v + 2 for v in range(n - 1) if mask >> v & 1)
        out.append(CutMetric(n, S))
    return out


def cut_matrix(n: int) -> np.ndarray:
    """Rows are the cut vectors in ``all_cuts`` order."""
    if n > MAX_CUT_N:
        raise ValueError(f"refusing to enumerate 2^{n - 1} cuts (n > {MAX_CUT_N})")
    masks = np.arange(2 ** (n - 1))
    side = np.zeros((len(masks), n), dtype=bool)
    for v in range(n - 1):
        side[:, v + 1] = (masks >> v) & 1
    I, J = pair_arrays(n)
    return (side[:, I] != side[:, J]).astype(float)


def vertex_certificate(fs: FacetSystem, x, tol_active: float = TOL_ACTIVE) -> tuple[bool, int]:
    """Is x a vertex? True iff the active facet normals span the whole space."""
    x = as_pair_vector(x, fs.n)
    if not membership(fs, x).inside:
        raise ValueError("point is not in the metric polytope")
    active = np.flatnonzero(fs.slacks(x) <= tol_active)
    if len(active) == 0:
        return False, 0
    A, _ = fs.dense()
    rank = int(np.linalg.matrix_rank(A[active]))
    return rank == fs.dim, rank
