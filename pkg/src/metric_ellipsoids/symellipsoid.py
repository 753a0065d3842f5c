"""The S_n-invariant ellipsoid family.

The form matrix A has entry alpha on the diagonal, beta between pairs that
share one vertex and gamma between disjoint pairs; the center is delta times
the all-ones vector.  A has three eigenspaces: the all-ones line, the degree
space spanned by s(i) - s(j), and the orthogonal complement of both.
Everything here runs in O(n^2) except ``materialize``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

from .pairspace import as_pair_vector, num_pairs, pair_arrays, unit, vertex_sums

MAX_DENSE_N = 30


@dataclass(frozen=True)
class SymEllipsoid:
    n: int
    alpha: float
    beta: float
    gamma: float
    delta: float = 0.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("need n >= 3")

    @property
    def dim(self) -> int:
        return num_pairs(self.n)

    def center(self) -> np.ndarray:
        return np.full(self.dim, self.delta)

    def scaled(self, r: float) -> SymEllipsoid:
        """The same ellipsoid inflated by r about its center."""
        return SymEllipsoid(self.n, r * self.alpha, r * self.beta, r * self.gamma, self.delta)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "delta": self.delta,
            "lambda": list(spectrum(self)),
        }

    @classmethod
    def from_json(cls, d: dict) -> SymEllipsoid:
        return cls(int(d["n"]), float(d["alpha"]), float(d["beta"]), float(d["gamma"]), float(d["delta"]))


class Spectrum(NamedTuple):
    lambda1: float
    lambda2: float
    lambda3: float


class SpectralParts(NamedTuple):
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray


def multiplicities(n: int) -> tuple[int, int, int]:
    return 1, n - 1, comb(n, 2) - n


def eigen_matrix(n: int) -> np.ndarray:
    """Rows map (alpha, beta, gamma) to (lambda1, lambda2, lambda3)."""
    return np.array(
        [
            [1.0, 2.0 * (n - 2), comb(n - 2, 2)],
            [1.0, n - 4.0, -(n - 3.0)],
            [1.0, -2.0, 1.0],
        ]
    )


def spectrum(e: SymEllipsoid) -> Spectrum:
    n, a, b, g = e.n, e.alpha, e.beta, e.gamma
    return Spectrum(
        a + 2 * (n - 2) * b + comb(n - 2, 2) * g,
        a + (n - 4) * b - (n - 3) * g,
        a - 2 * b + g,
    )


def from_spectrum(n: int, lam1: float, lam2: float, lam3: float, delta: float = 0.0) -> SymEllipsoid:
    """Inverse of ``spectrum`` via the entries of the three eigenprojectors.

    For n = 3 the third eigenspace is empty, lam3 is ignored and gamma is 0.
    """
    N = comb(n, 2)
    if n == 3:
        return SymEllipsoid(3, (lam1 + 2 * lam2) / 3, (lam1 - lam2) / 3, 0.0, delta)
    k = n * (n - 2)
    alpha = lam1 / N + 2 * lam2 / n + lam3 * (1 - 1 / N - 2 / n)
    beta = lam1 / N + lam2 * (n - 4) / k - lam3 * (1 / N + (n - 4) / k)
    gamma = lam1 / N - 4 * lam2 / k - lam3 * (1 / N - 4 / k)
    return SymEllipsoid(n, alpha, beta, gamma, delta)


def matvec(e: SymEllipsoid, x) -> np.ndarray:
    """A x without forming A; batched over leading axes."""
    n = e.n
    x = as_pair_vector(x, n)
    I, J = pair_arrays(n)
    s = vertex_sums(x, n)
    T = x.sum(axis=-1, keepdims=True)
    return (e.alpha - 2 * e.beta + e.gamma) * x + (e.beta - e.gamma) * (s[..., I] + s[..., J]) + e.gamma * T


def degree_projection(n: int, x) -> np.ndarray:
    """Orthogonal projection onto {y_ij = a_i + a_j : sum(a) = 0}."""
    x = as_pair_vector(x, n)
    I, J = pair_arrays(n)
    s = vertex_sums(x, n)
    T = x.sum(axis=-1, keepdims=True)
    a = (s - 2.0 * T / n) / (n - 2)
    a = a - a.mean(axis=-1, keepdims=True)
    return a[..., I] + a[..., J]


def spectral_project(n: int, x) -> SpectralParts:
    """Norms of the components of x in the three eigenspaces."""
    x = as_pair_vector(x, n)
    N = num_pairs(n)
    T = x.sum(axis=-1)
    y2 = degree_projection(n, x)
    rest = x - (T / N)[..., None] - y2
    return SpectralParts(np.abs(T) / np.sqrt(N), np.linalg.norm(y2, axis=-1), np.linalg.norm(rest, axis=-1))


def inv_norm(e: SymEllipsoid, x) -> np.ndarray:
    """||A^{-1} x|| from the spectral parts of x."""
    lam = spectrum(e)
    used = [k for k, m in enumerate(multiplicities(e.n)) if m > 0]
    if any(lam[k] <= 0 for k in used):
        raise ValueError(f"form matrix is not positive definite: spectrum {tuple(lam)}")
    p = spectral_project(e.n, x)
    total = sum((p[k] / lam[k]) ** 2 for k in used)
    return np.sqrt(total)


def triangle_norm_sq(e: SymEllipsoid) -> float:
    """||A t||^2 for t = -e12 - e23 + e13."""
    n, a, b, g = e.n, e.alpha, e.beta, e.gamma
    return 3 * a * a - 4 * a * b + 4 * (n - 2) * b * b - 4 * (n - 3) * b * g + (comb(n, 2) - 3) * g * g


def bound_norm_sq(e: SymEllipsoid) -> float:
    """||A e12||^2, one column of A."""
    n, a, b, g = e.n, e.alpha, e.beta, e.gamma
    return a * a + 2 * (n - 2) * b * b + comb(n - 2, 2) * g * g


def triangle_vector(n: int) -> np.ndarray:
    """t = -e12 - e23 + e13, the normal of x_13 <= x_12 + x_23."""
    return unit(n, 1, 3) - unit(n, 1, 2) - unit(n, 2, 3)


def spectral_weights(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Squared spectral parts of t and of e12, in closed form.

    With these, ||A t||^2 = sum_k wt[k] lambda_k^2 and
    ||A e12||^2 = sum_k we[k] lambda_k^2.
    """
    N = comb(n, 2)
    p2t = 4.0 * (n - 1) / (n * (n - 2))
    p2e = 2.0 / n
    wt = np.array([1.0 / N, p2t, max(3.0 - 1.0 / N - p2t, 0.0)])
    we = np.array([1.0 / N, p2e, max(1.0 - 1.0 / N - p2e, 0.0)])
    return wt, we


def overlap_pattern(n: int) -> np.ndarray:
    """|{i,j} & {k,l}| for every pair of pairs."""
    I, J = pair_arrays(n)
    return (
        (I[:, None] == I[None, :]).astype(np.int8)
        + (I[:, None] == J[None, :])
        + (J[:, None] == I[None, :])
        + (J[:, None] == J[None, :])
    )


def materialize(e: SymEllipsoid) -> np.ndarray:
    if e.n > MAX_DENSE_N:
        raise ValueError(f"dense form matrix capped at n={MAX_DENSE_N}")
    values = np.array([e.gamma, e.beta, e.alpha])
    return values[overlap_pattern(e.n)]
