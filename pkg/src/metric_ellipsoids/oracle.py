"""Generic maximum-volume inscribed ellipsoid of a polytope {x : a_i . x <= b_i}.

Used as a brute-force cross-check at small dimension; it knows nothing about
the symmetry of the metric polytope.  The ellipsoid is {A u + c : ||u|| <= 1}
with A symmetric positive definite.  We minimise

    -log det A - mu * sum_i log((b_i - a_i . c)^2 - ||A a_i||^2)

over (A, c) for a decreasing sequence of mu, using damped Newton steps with
a Cholesky guard on A.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .polytope import FacetSystem
from .symellipsoid import SymEllipsoid, overlap_pattern

log = logging.getLogger(__name__)

MAX_DIM = 15
METRIC_START_DELTA = 0.6
METRIC_START_EPS = 0.05


class OracleError(RuntimeError):
    pass


@dataclass
class GeneralEllipsoid:
    A: np.ndarray
    c: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.c)

    def log_det(self) -> float:
        sign, ld = np.linalg.slogdet(self.A)
        return float(ld) if sign > 0 else -np.inf

    def containment_slacks(self, G: np.ndarray, h: np.ndarray) -> np.ndarray:
        """b_i - a_i . c - ||A a_i|| per constraint; all >= 0 iff contained."""
        return h - G @ self.c - np.linalg.norm(G @ self.A, axis=1)

    def to_json(self) -> dict:
        return {"dim": self.dim, "A": self.A.ravel().tolist(), "c": self.c.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> GeneralEllipsoid:
        m = int(d["dim"])
        return cls(np.array(d["A"], dtype=float).reshape(m, m), np.array(d["c"], dtype=float))


@dataclass
class OracleResult:
    """``kkt_residual`` bounds how far ``log_det`` can be below the optimum."""

    e: GeneralEllipsoid
    log_det: float
    iterations: int
    kkt_residual: float

    def to_json(self) -> dict:
        return {
            "ellipsoid": self.e.to_json(),
            "log_det": self.log_det,
            "iterations": self.iterations,
            "kkt_residual": self.kkt_residual,
        }

    @classmethod
    def from_json(cls, d: dict) -> OracleResult:
        return cls(GeneralEllipsoid.from_json(d["ellipsoid"]), float(d["log_det"]), int(d["iterations"]), float(d["kkt_residual"]))


def _sym_basis(d: int) -> np.ndarray:
    """Basis of symmetric d x d matrices: E_kk, and E_kl + E_lk for k < l."""
    rows, cols = np.triu_indices(d)
    E = np.zeros((len(rows), d, d))
    k = np.arange(len(rows))
    E[k, rows, cols] = 1.0
    E[k, cols, rows] = 1.0
    return E


class _Program:
    def __init__(self, G: np.ndarray, h: np.ndarray):
        self.G = G
        self.h = h
        m, d = G.shape
        self.m, self.d = m, d
        self.E = _sym_basis(d)
        self.P = len(self.E)
        self.rows, self.cols = np.triu_indices(d)
        # W[i, :, p] = E_p a_i, so A a_i = W[i] @ vech(A)
        self.W = np.einsum("pkl,il->ikp", self.E, G)
        self.WtW = np.einsum("ikp,ikq->ipq", self.W, self.W)
        self.Evec = self.E.reshape(self.P, d * d).T
        self.aat = np.einsum("ik,il->ikl", G, G)

    def pack(self, A, c) -> np.ndarray:
        return np.concatenate([A[self.rows, self.cols], c])

    def unpack(self, v):
        A = np.zeros((self.d, self.d))
        A[self.rows, self.cols] = v[: self.P]
        A[self.cols, self.rows] = v[: self.P]
        return A, v[self.P:]

    def _parts(self, v):
        A, c = self.unpack(v)
        try:
            chol = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            return None
        s = self.h - self.G @ c
        w = self.G @ A
        g = s * s - np.einsum("ik,ik->i", w, w)
        if np.any(s <= 0) or np.any(g <= 0):
            return None
        return A, c, chol, s, w, g

    def value(self, v, mu: float) -> float:
        parts = self._parts(v)
        if parts is None:
            return np.inf
        _, _, chol, _, _, g = parts
        return float(-2.0 * np.sum(np.log(np.diag(chol))) - mu * np.sum(np.log(g)))

    def derivs(self, v, mu: float):
        A, c, chol, s, w, g = self._parts(v)
        Ainv = np.linalg.inv(A)
        Ainv = 0.5 * (Ainv + Ainv.T)
        P = self.P
        grad = np.zeros(P + self.d)
        hess = np.zeros((P + self.d, P + self.d))
        grad[:P] = -self.Evec.T @ Ainv.ravel()
        hess[:P, :P] = self.Evec.T @ np.kron(Ainv, Ainv) @ self.Evec
        # gradients of g_i
        Dg = np.zeros((self.m, P + self.d))
        Dg[:, :P] = -2.0 * np.einsum("ikp,ik->ip", self.W, w)
        Dg[:, P:] = -2.0 * s[:, None] * self.G
        grad += -mu * (Dg / g[:, None]).sum(axis=0)
        hess += mu * (Dg.T @ (Dg / (g * g)[:, None]))
        hess[:P, :P] += mu * 2.0 * np.einsum("i,ipq->pq", 1.0 / g, self.WtW)
        hess[P:, P:] -= mu * 2.0 * np.einsum("i,ikl->kl", 1.0 / g, self.aat)
        return grad, hess


def _center(prog: _Program, v, mu, budget, eps=1e-12):
    steps = 0
    dec2 = np.inf
    grad = None
    while steps < budget:
        grad, hess = prog.derivs(v, mu)
        dv = -np.linalg.solve(hess, grad)
        dec2 = float(-grad @ dv)
        if dec2 / 2 <= eps:
            break
        F = prog.value(v, mu)
        t = 1.0
        while True:
            vn = v + t * dv
            Fn = prog.value(vn, mu)
            if Fn <= F - 0.25 * t * dec2:
                break
            t *= 0.5
            if t < 1e-14:
                raise OracleError(f"line search failed at mu={mu:g}; polytope may be unbounded")
        v = vn
        steps += 1
    return v, steps, dec2, grad


def _as_constraints(constraints):
    if isinstance(constraints, FacetSystem):
        return constraints.dense()
    G, h = constraints
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    if G.shape[0] != len(h):
        raise ValueError("constraint matrix and right-hand side disagree in length")
    return G, h


def _check_bounded(G: np.ndarray) -> None:
    """The recession cone {d : G d <= 0} must be {0}."""
    d = G.shape[1]
    for k in range(d):
        for sign in (1.0, -1.0):
            cost = np.zeros(d)
            cost[k] = -sign
            r = linprog(cost, A_ub=G, b_ub=np.zeros(len(G)), bounds=[(-1, 1)] * d, method="highs")
            if r.status == 0 and -r.fun > 1e-9:
                raise OracleError("polytope is unbounded")


def chebyshev_center(G: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, float]:
    """Center and radius of the largest inscribed ball."""
    m, d = G.shape
    norms = np.linalg.norm(G, axis=1)
    cost = np.zeros(d + 1)
    cost[-1] = -1.0
    r = linprog(cost, A_ub=np.hstack([G, norms[:, None]]), b_ub=h, bounds=[(None, None)] * d + [(0, None)], method="highs")
    if r.status != 0 or r.x[-1] <= 1e-12:
        raise OracleError("polytope has empty interior or the center LP failed")
    return r.x[:d], float(r.x[-1])


def _start(prog: _Program, constraints, G, h):
    if isinstance(constraints, FacetSystem):
        v = prog.pack(METRIC_START_EPS * np.eye(prog.d), np.full(prog.d, METRIC_START_DELTA))
        if np.isfinite(prog.value(v, 1.0)):
            return v
    c, r = chebyshev_center(G, h)
    return prog.pack(0.5 * r * np.eye(prog.d), c)


def solve_mve(constraints, tol: float = 1e-9, max_iter: int = 500) -> OracleResult:
    """Maximum-volume ellipsoid inside a bounded polytope.

    ``constraints`` is a FacetSystem or a pair (G, h) meaning G x <= h.
    """
    G, h = _as_constraints(constraints)
    m, d = G.shape
    if d > MAX_DIM:
        raise ValueError(f"oracle dimension {d} exceeds the guard {MAX_DIM}")
    _check_bounded(G)
    prog = _Program(G, h)
    v = _start(prog, constraints, G, h)

    total = 0
    mu = 1.0
    while True:
        v, steps, dec2, _ = _center(prog, v, mu, max_iter - total)
        total += steps
        log.debug("oracle mu=%.1e steps=%d dec2=%.2e", mu, steps, dec2)
        if total >= max_iter:
            raise OracleError(f"oracle did not converge within {max_iter} Newton steps")
        if 2 * m * mu <= 0.5 * tol:
            break
        mu *= 0.1

    A, c = prog.unpack(v)
    # log-det suboptimality bound: duality gap of the central point plus the
    # centering error measured by the last Newton decrement
    kkt = float(2 * m * mu + dec2)
    e = GeneralEllipsoid(A, c.copy())
    return OracleResult(e, e.log_det(), total, kkt)


def pattern_spread(A: np.ndarray, n: int) -> tuple[float, float, float]:
    """max - min of the entries of A within each overlap class (same, one, disjoint)."""
    pat = overlap_pattern(n)
    out = []
    for cls in (2, 1, 0):
        vals = A[pat == cls]
        out.append(float(vals.max() - vals.min()) if vals.size else 0.0)
    return tuple(out)


def symmetry_average(e: GeneralEllipsoid, n: int) -> SymEllipsoid:
    if e.dim != n * (n - 1) // 2:
        raise ValueError(f"ellipsoid of dimension {e.dim} does not live on pairs of {n} points")
    pat = overlap_pattern(n)
    alpha = float(e.A[pat == 2].mean())
    beta = float(e.A[pat == 1].mean())
    gamma = float(e.A[pat == 0].mean()) if np.any(pat == 0) else 0.0
    return SymEllipsoid(n, alpha, beta, gamma, float(e.c.mean()))
