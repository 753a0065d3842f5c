"""Coordinates indexed by unordered pairs of vertices.

A point of R^{C(n,2)} is stored as a flat numpy array.  Vertices are 1-based
in every public signature; the flat index is 0-based and follows the
lexicographic order of (i, j) with i < j, so for n = 4 the order is
12, 13, 14, 23, 24, 34.

Permutations act by pulling back indices: ``apply_permutation(sigma, x)``
returns y with y_ij = x_{sigma(i) sigma(j)}.  Under this convention
``apply_permutation(s, apply_permutation(t, x)) == apply_permutation(t o s, x)``
where (t o s)(i) = t(s(i)).
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, isqrt

import numpy as np


def num_pairs(n: int) -> int:
    return comb(n, 2)


def n_from_dim(dim: int) -> int:
    """Recover n from C(n, 2); raises if ``dim`` is not a binomial coefficient."""
    n = (1 + isqrt(1 + 8 * dim)) // 2
    if comb(n, 2) != dim:
        raise ValueError(f"{dim} is not of the form C(n, 2)")
    return n


def flatten(n: int, i: int, j: int) -> int:
    """Flat index of the unordered pair {i, j} (1-based vertices)."""
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"vertices ({i}, {j}) out of range [1, {n}]")
    if i == j:
        raise ValueError("a pair needs two distinct vertices")
    if i > j:
        i, j = j, i
    return (i - 1) * (2 * n - i) // 2 + (j - i - 1)


def unflatten(n: int, flat: int) -> tuple[int, int]:
    if not 0 <= flat < num_pairs(n):
        raise ValueError(f"flat index {flat} out of range for n={n}")
    I, J = pair_arrays(n)
    return int(I[flat]) + 1, int(J[flat]) + 1


@lru_cache(maxsize=64)
def pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based endpoint arrays (I, J), I < J, in flat order. Read-only."""
    I, J = np.triu_indices(n, k=1)
    I = I.astype(np.intp)
    J = J.astype(np.intp)
    I.flags.writeable = False
    J.flags.writeable = False
    return I, J


@lru_cache(maxsize=64)
def index_matrix(n: int) -> np.ndarray:
    """n x n array F with F[i, j] = flat index of {i+1, j+1}; -1 on the diagonal."""
    F = np.full((n, n), -1, dtype=np.intp)
    I, J = pair_arrays(n)
    k = np.arange(len(I))
    F[I, J] = k
    F[J, I] = k
    F.flags.writeable = False
    return F


def as_pair_vector(x, n: int | None = None) -> np.ndarray:
    """Validate ``x`` as a pair vector (last axis of length C(n, 2))."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise ValueError("pair vector must have at least one axis")
    if n is None:
        n_from_dim(x.shape[-1])
    elif x.shape[-1] != num_pairs(n):
        raise ValueError(f"expected length {num_pairs(n)} for n={n}, got {x.shape[-1]}")
    return x


def unit(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros(num_pairs(n))
    e[flatten(n, i, j)] = 1.0
    return e


def star(n: int, i: int) -> np.ndarray:
    """Indicator s(i) of all pairs containing vertex i."""
    I, J = pair_arrays(n)
    return ((I == i - 1) | (J == i - 1)).astype(float)


def vertex_sums(x: np.ndarray, n: int) -> np.ndarray:
    """s_i = sum_{j != i} x_ij for every vertex, batched over leading axes."""
    I, J = pair_arrays(n)
    x = np.asarray(x, dtype=float)
    M = np.zeros(x.shape[:-1] + (n, n))
    M[..., I, J] = x
    return M.sum(axis=-1) + M.sum(axis=-2)


def to_matrix(x, n: int | None = None) -> np.ndarray:
    """Symmetric distance matrix with zero diagonal."""
    x = as_pair_vector(x, n)
    n = n_from_dim(x.shape[-1])
    I, J = pair_arrays(n)
    D = np.zeros(x.shape[:-1] + (n, n))
    D[..., I, J] = x
    D[..., J, I] = x
    return D


def from_matrix(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.shape[-1] != D.shape[-2]:
        raise ValueError("distance matrix must be square")
    I, J = pair_arrays(D.shape[-1])
    return D[..., I, J].copy()


def check_permutation(sigma, n: int | None = None) -> np.ndarray:
    """Return ``sigma`` as a 0-based index array after validating it.

    ``sigma[k]`` is the image of vertex k+1, given 1-based.
    """
    s = np.asarray(sigma)
    if s.ndim != 1 or not np.issubdtype(s.dtype, np.integer):
        raise ValueError("permutation must be a 1-D integer sequence")
    if n is not None and len(s) != n:
        raise ValueError(f"permutation of length {len(s)} does not act on n={n}")
    if not np.array_equal(np.sort(s), np.arange(1, len(s) + 1)):
        raise ValueError("not a permutation of 1..n")
    return s.astype(np.intp) - 1


def compose(t, s) -> np.ndarray:
    """(t o s)(i) = t(s(i)), both 1-based."""
    t0 = check_permutation(t)
    s0 = check_permutation(s, len(t0))
    return t0[s0] + 1


def apply_permutation(sigma, x) -> np.ndarray:
    """[sigma(x)]_ij = x_{sigma(i) sigma(j)}; acts on the last axis."""
    x = as_pair_vector(x)
    n = n_from_dim(x.shape[-1])
    s = check_permutation(sigma, n)
    I, J = pair_arrays(n)
    return x[..., index_matrix(n)[s[I], s[J]]]


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(n) + 1
