"""Largest-volume S_n-invariant ellipsoid inside the metric polytope.

The problem in (alpha, beta, gamma, delta) is

    maximize   log(l1) + (n-1) log(l2) + (C(n,2)-n) log(l3)
    subject to ||A t||^2   <= delta^2        (triangle facets)
               ||A e12||^2 <= (1-delta)^2    (diameter bounds)

with l1, l2, l3 the eigenvalues of the form matrix.  ``ReducedProblem``
exposes it in those coordinates with analytic derivatives.  ``solve_inner``
works in eigenvalue coordinates, where the objective and both constraint
quadratics are diagonal: a log-barrier path is followed with damped Newton
steps, then the KKT system with both constraints active is solved by Newton
to machine precision.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .symellipsoid import (
    SymEllipsoid,
    eigen_matrix,
    from_spectrum,
    bound_norm_sq,
    multiplicities,
    spectral_weights,
    spectrum,
    triangle_norm_sq,
)

log = logging.getLogger(__name__)

START = (0.2, 0.0, 0.0, 0.5)
MAX_N = 10_000
ACTIVE_TOL = 1e-8
BARRIER_STAGES = 11  # mu = 1, 0.1, ..., 1e-10


class SolverError(RuntimeError):
    """Raised when the barrier or KKT iteration fails to converge."""

    def __init__(self, message: str, last: SymEllipsoid | None = None, residual: float = float("nan")):
        super().__init__(message)
        self.last = last
        self.residual = residual


class ReducedProblem:
    """Objective and constraints of the 4-variable program in x = (alpha, beta, gamma, delta).

    Constraints are written h(x) <= 0 with h1 = ||A t||^2 - delta^2 and
    h2 = ||A e12||^2 - (1 - delta)^2.
    """

    def __init__(self, n: int):
        if n < 3:
            raise ValueError("need n >= 3")
        self.n = n
        self.N = comb(n, 2)
        self.L = eigen_matrix(n)
        self.mult = np.array(multiplicities(n), dtype=float)
        self.M1 = np.array(
            [
                [3.0, -2.0, 0.0],
                [-2.0, 4.0 * (n - 2), -2.0 * (n - 3)],
                [0.0, -2.0 * (n - 3), comb(n, 2) - 3.0],
            ]
        )
        self.M2 = np.diag([1.0, 2.0 * (n - 2), float(comb(n - 2, 2))])

    def lambdas(self, x) -> np.ndarray:
        return self.L @ np.asarray(x, dtype=float)[:3]

    def objective(self, x) -> float:
        lam = self.lambdas(x)
        used = self.mult > 0
        if np.any(lam[used] <= 0):
            return -np.inf
        return float(np.sum(self.mult[used] * np.log(lam[used])))

    def gradient(self, x) -> np.ndarray:
        lam = self.lambdas(x)
        c = np.where(self.mult > 0, self.mult / np.where(self.mult > 0, lam, 1.0), 0.0)
        return np.append(self.L.T @ c, 0.0)

    def hessian(self, x) -> np.ndarray:
        lam = self.lambdas(x)
        c = np.where(self.mult > 0, self.mult / np.where(self.mult > 0, lam, 1.0) ** 2, 0.0)
        H = np.zeros((4, 4))
        H[:3, :3] = -(self.L.T * c) @ self.L
        return H

    def constraints(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z, d = x[:3], x[3]
        return np.array([z @ self.M1 @ z - d * d, z @ self.M2 @ z - (1 - d) ** 2])

    def constraint_gradients(self, x) -> np.ndarray:
        """Rows are grad h1, grad h2."""
        x = np.asarray(x, dtype=float)
        z, d = x[:3], x[3]
        return np.array([np.append(2 * self.M1 @ z, -2 * d), np.append(2 * self.M2 @ z, 2 * (1 - d))])

    def constraint_hessians(self) -> tuple[np.ndarray, np.ndarray]:
        H1 = np.zeros((4, 4))
        H1[:3, :3] = 2 * self.M1
        H1[3, 3] = -2.0
        H2 = np.zeros((4, 4))
        H2[:3, :3] = 2 * self.M2
        H2[3, 3] = -2.0
        return H1, H2

    def kkt_residual(self, x, nu) -> float:
        """Infinity norm of stationarity for -objective/N plus constraint values."""
        stat = -self.gradient(x) / self.N + np.asarray(nu) @ self.constraint_gradients(x)
        if self.n == 3:
            stat[2] = 0.0
        return float(max(np.max(np.abs(stat)), np.max(np.abs(self.constraints(x)))))

    def retract(self, x) -> np.ndarray:
        """Scale (alpha, beta, gamma) toward 0 until both constraints hold; delta is kept."""
        x = np.array(x, dtype=float)
        d = min(max(x[3], 0.0), 1.0)
        x[3] = d
        q1, q2 = x[:3] @ self.M1 @ x[:3], x[:3] @ self.M2 @ x[:3]
        s = 1.0
        if q1 > 0:
            s = min(s, d / np.sqrt(q1))
        if q2 > 0:
            s = min(s, (1 - d) / np.sqrt(q2))
        x[:3] *= s
        return x


@dataclass
class SolveResult:
    e: SymEllipsoid
    log_volume_factor: float
    kkt_residual: float
    active: tuple[bool, bool]
    slacks: tuple[float, float]
    multipliers: tuple[float, float]
    iterations: int
    history: list[tuple[float, int]] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "n": self.e.n,
            "ellipsoid": self.e.to_json(),
            "log_volume_factor": self.log_volume_factor,
            "kkt_residual": self.kkt_residual,
            "active": list(self.active),
            "slacks": list(self.slacks),
            "multipliers": list(self.multipliers),
            "iterations": self.iterations,
        }

    @classmethod
    def from_json(cls, d: dict) -> SolveResult:
        return cls(
            SymEllipsoid.from_json(d["ellipsoid"]),
            float(d["log_volume_factor"]),
            float(d["kkt_residual"]),
            tuple(bool(a) for a in d["active"]),
            tuple(float(s) for s in d["slacks"]),
            tuple(float(m) for m in d["multipliers"]),
            int(d["iterations"]),
        )


class _SpectralProgram:
    """The same program in z = (u_1..u_K, delta) with lambda_k = sigma_k u_k.

    sigma_k = sqrt(N / m_k) makes every diagonal Hessian entry O(1).
    """

    def __init__(self, n: int):
        N = comb(n, 2)
        mult = np.array(multiplicities(n), dtype=float)
        keep = mult > 0
        wt, we = spectral_weights(n)
        self.n = n
        self.keep = keep
        self.w = mult[keep] / N
        self.sigma = np.sqrt(1.0 / self.w)
        self.a = wt[keep] * self.sigma**2
        self.b = we[keep] * self.sigma**2
        self.K = int(keep.sum())

    def to_z(self, lam, delta) -> np.ndarray:
        return np.append(np.asarray(lam)[self.keep] / self.sigma, delta)

    def to_lambda(self, z) -> np.ndarray:
        lam = np.zeros(3)
        lam[self.keep] = z[: self.K] * self.sigma
        return lam

    def g(self, z):
        u, d = z[: self.K], z[-1]
        return d * d - self.a @ (u * u), (1 - d) ** 2 - self.b @ (u * u)

    def feasible(self, z) -> bool:
        u, d = z[: self.K], z[-1]
        g1, g2 = self.g(z)
        return bool(np.all(u > 0) and 0 < d < 1 and g1 > 0 and g2 > 0)

    def f0(self, z) -> float:
        return float(-self.w @ np.log(z[: self.K]))

    def barrier(self, z, mu: float) -> float:
        g1, g2 = self.g(z)
        return self.f0(z) - mu * (np.log(g1) + np.log(g2))

    def _h_parts(self, z):
        """Gradients and Hessians of h1 = -g1, h2 = -g2."""
        u, d = z[: self.K], z[-1]
        gh1 = np.append(2 * self.a * u, -2 * d)
        gh2 = np.append(2 * self.b * u, 2 * (1 - d))
        Hh1 = np.diag(np.append(2 * self.a, -2.0))
        Hh2 = np.diag(np.append(2 * self.b, -2.0))
        return gh1, gh2, Hh1, Hh2

    def f0_derivs(self, z):
        u = z[: self.K]
        grad = np.append(-self.w / u, 0.0)
        hess = np.diag(np.append(self.w / u**2, 0.0))
        return grad, hess

    def barrier_derivs(self, z, mu: float):
        g1, g2 = self.g(z)
        gh1, gh2, Hh1, Hh2 = self._h_parts(z)
        grad0, hess0 = self.f0_derivs(z)
        # -mu log(-h): grad = mu grad_h / (-h), hess = mu (gh gh^T / h^2 + Hh / (-h))
        grad = grad0 + mu * (gh1 / g1 + gh2 / g2)
        hess = hess0 + mu * (np.outer(gh1, gh1) / g1**2 + Hh1 / g1 + np.outer(gh2, gh2) / g2**2 + Hh2 / g2)
        return grad, hess

    def kkt_system(self, z, nu):
        g1, g2 = self.g(z)
        gh1, gh2, Hh1, Hh2 = self._h_parts(z)
        grad0, hess0 = self.f0_derivs(z)
        r = np.concatenate([grad0 + nu[0] * gh1 + nu[1] * gh2, [-g1, -g2]])
        m = len(z)
        J = np.zeros((m + 2, m + 2))
        J[:m, :m] = hess0 + nu[0] * Hh1 + nu[1] * Hh2
        J[:m, m] = gh1
        J[:m, m + 1] = gh2
        J[m, :m] = gh1
        J[m + 1, :m] = gh2
        return r, J


def _centering(prog: _SpectralProgram, z, mu, budget, eps=1e-14):
    """Damped Newton on the barrier function; returns (z, steps, decrement^2)."""
    steps = 0
    dec2 = np.inf
    while steps < budget:
        grad, hess = prog.barrier_derivs(z, mu)
        dz = -np.linalg.solve(hess, grad)
        dec2 = float(-grad @ dz)
        if dec2 / 2 <= eps:
            break
        F = prog.barrier(z, mu)
        t = 1.0
        while True:
            zn = z + t * dz
            if prog.feasible(zn) and prog.barrier(zn, mu) <= F - 0.25 * t * dec2:
                break
            t *= 0.5
            if t < 1e-16:
                return z, steps, dec2
        z = zn
        steps += 1
    return z, steps, dec2


def solve_inner(n: int, tol_kkt: float = 1e-10, max_iter: int = 500) -> SolveResult:
    """Maximise the reduced log-volume for a given n.

    ``max_iter`` caps the total number of Newton steps.  Raises
    ``SolverError`` if the KKT residual does not reach ``tol_kkt``.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if n > MAX_N:
        raise ValueError(f"n={n} exceeds the supported range (<= {MAX_N})")
    if not 1e-14 <= tol_kkt <= 1e-6:
        raise ValueError("tol_kkt must lie in [1e-14, 1e-6]")

    prog = _SpectralProgram(n)
    problem = ReducedProblem(n)
    x0 = np.array(START)
    z = prog.to_z(problem.lambdas(x0), x0[3])
    assert prog.feasible(z)

    total = 0
    history = []
    for stage in range(BARRIER_STAGES):
        mu = 10.0**-stage
        z, steps, dec2 = _centering(prog, z, mu, max_iter - total)
        total += steps
        history.append((mu, steps))
        if total >= max_iter:
            raise SolverError(f"barrier stage mu={mu:g} ran out of iterations", _to_ellipsoid(prog, z), dec2)

    g1, g2 = prog.g(z)
    nu = np.array([mu / g1, mu / g2])
    best = (np.inf, z, nu)
    for _ in range(30):
        r, J = prog.kkt_system(z, nu)
        res = float(np.max(np.abs(r)))
        if res < best[0]:
            best = (res, z, nu)
        if res < 1e-16:
            break
        step = np.linalg.solve(J, -r)
        z = z + step[: len(z)]
        nu = nu + step[len(z):]
        total += 1
        if total >= max_iter:
            break
    _, z, nu = best

    e = _to_ellipsoid(prog, z)
    x = np.array([e.alpha, e.beta, e.gamma, e.delta])
    kkt = problem.kkt_residual(x, nu)
    log.debug("n=%d newton steps=%d kkt=%.3e nu=%s", n, total, kkt, nu)
    if not (kkt <= tol_kkt and np.all(nu > 0)):
        raise SolverError(f"KKT residual {kkt:.3e} above tolerance {tol_kkt:.1e} (multipliers {nu})", e, kkt)

    slacks = (e.delta - np.sqrt(triangle_norm_sq(e)), (1 - e.delta) - np.sqrt(bound_norm_sq(e)))
    return SolveResult(
        e=e,
        log_volume_factor=problem.objective(x),
        kkt_residual=kkt,
        active=tuple(bool(abs(s) <= ACTIVE_TOL) for s in slacks),
        slacks=tuple(float(s) for s in slacks),
        multipliers=(float(nu[0]), float(nu[1])),
        iterations=total,
        history=history,
    )


def _to_ellipsoid(prog: _SpectralProgram, z) -> SymEllipsoid:
    lam = prog.to_lambda(z)
    return from_spectrum(prog.n, *lam, delta=float(z[-1]))


TABLE_HEADER = ("n", "alpha", "n_beta", "n2_gamma", "delta", "lambda1", "lambda2", "lambda3", "logvol", "kkt")


def table_row(res: SolveResult) -> tuple:
    e = res.e
    n = e.n
    lam = spectrum(e)
    return (n, e.alpha, n * e.beta, n * n * e.gamma, e.delta, *lam, res.log_volume_factor, res.kkt_residual)


def asymptotic_table(n_values, tol_kkt: float = 1e-10, max_iter: int = 500) -> list[tuple]:
    """One row per n, sorted by n, columns as in ``TABLE_HEADER``."""
    return [table_row(solve_inner(n, tol_kkt, max_iter)) for n in sorted(n_values)]


def limit_constants() -> dict[str, float]:
    """n -> infinity values of the normalised table columns."""
    a = (np.sqrt(3) - 1) / 2
    r = np.sqrt(3 - np.sqrt(3))
    return {
        "alpha": a,
        "n_beta": a * (r - 1),
        "n2_gamma": a * (4 - 2 * r),
        "delta": a * np.sqrt(3),
        "lambda1": a * 3**0.25,
        "lambda2": a * r,
        "lambda3": a,
    }
