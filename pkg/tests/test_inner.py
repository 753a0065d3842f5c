import json
from math import comb

import numpy as np
import pytest

from metric_ellipsoids.inner import (
    TABLE_HEADER,
    ReducedProblem,
    SolveResult,
    SolverError,
    asymptotic_table,
    limit_constants,
    solve_inner,
)
from metric_ellipsoids.symellipsoid import SymEllipsoid, bound_norm_sq, spectrum, triangle_norm_sq


def feasible_points(n, rng, k=5):
    prob = ReducedProblem(n)
    out = []
    while len(out) < k:
        b, g = 0.06 / n, 0.05 / n**2
        x = np.array([rng.uniform(0.05, 0.3), rng.uniform(-b, b), rng.uniform(-g, g), rng.uniform(0.3, 0.7)])
        if n == 3:
            x[2] = 0.0
        if np.all(prob.constraints(x) < 0) and np.isfinite(prob.objective(x)):
            out.append(x)
    return out


@pytest.mark.parametrize("n", [3, 4, 7, 25])
def test_derivatives_match_finite_differences(n):
    prob = ReducedProblem(n)
    # step 1e-6 in coordinates scaled to the natural sizes of alpha, beta, gamma, delta
    steps = 1e-6 * np.array([1.0, 1.0 / n, 1.0 / n**2, 1.0])
    H1, H2 = prob.constraint_hessians()
    for x in feasible_points(n, np.random.default_rng(n)):
        g, H, J = prob.gradient(x), prob.hessian(x), prob.constraint_gradients(x)
        for k, h in enumerate(steps):
            d = np.zeros(4)
            d[k] = h
            fd = (prob.objective(x + d) - prob.objective(x - d)) / (2 * h)
            assert fd == pytest.approx(g[k], rel=1e-6, abs=1e-6)
            fd = (prob.gradient(x + d) - prob.gradient(x - d)) / (2 * h)
            assert np.allclose(fd, H[:, k], rtol=1e-6, atol=1e-6 * np.abs(H).max())
            fd = (prob.constraints(x + d) - prob.constraints(x - d)) / (2 * h)
            assert np.allclose(fd, J[:, k], rtol=1e-6, atol=1e-9)
            fd = (prob.constraint_gradients(x + d) - prob.constraint_gradients(x - d)) / (2 * h)
            assert np.allclose(fd[0], H1[:, k], rtol=1e-6, atol=1e-8)
            assert np.allclose(fd[1], H2[:, k], rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("n", [3, 5, 11])
def test_constraints_match_closed_forms(n):
    prob = ReducedProblem(n)
    x = np.array([0.3, 0.01, 0.002 if n > 3 else 0.0, 0.6])
    e = SymEllipsoid(n, *x)
    assert np.allclose(prob.constraints(x), [triangle_norm_sq(e) - 0.36, bound_norm_sq(e) - 0.16], atol=1e-15)
    assert np.allclose(prob.lambdas(x), spectrum(e))


def test_start_point_is_interior():
    for n in [3, 4, 10, 1000, 10_000]:
        assert np.all(ReducedProblem(n).constraints([0.2, 0.0, 0.0, 0.5]) < 0)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 10, 30, 50])
def test_solution_is_certified(solved, n):
    res = solved(n)
    e = res.e
    assert res.kkt_residual <= 1e-10
    assert res.active == (True, True)
    assert all(abs(s) <= 1e-8 for s in res.slacks)
    assert all(m > 0 for m in res.multipliers)
    assert np.sqrt(triangle_norm_sq(e)) <= e.delta + 1e-10
    assert np.sqrt(bound_norm_sq(e)) <= 1 - e.delta + 1e-10
    assert min(spectrum(e)[: 2 if n == 3 else 3]) > 0 and 0 < e.delta < 1
    if n == 3:
        assert e.gamma == 0.0


@pytest.mark.parametrize("n", [3, 4, 5, 8, 20])
def test_perturbation_optimality(solved, n):
    res = solved(n)
    prob = ReducedProblem(n)
    e = res.e
    x0 = np.array([e.alpha, e.beta, e.gamma, e.delta])
    f0 = prob.objective(x0)
    for k in range(4):
        if n == 3 and k == 2:
            continue
        for sign in (1, -1):
            x = x0.copy()
            x[k] += sign * 1e-4
            assert prob.objective(prob.retract(x)) <= f0 + 1e-9


def test_log_volume_is_log_det(solved):
    res = solved(5)
    from metric_ellipsoids.symellipsoid import materialize

    assert res.log_volume_factor == pytest.approx(np.linalg.slogdet(materialize(res.e))[1], abs=1e-12)


def test_argument_checks():
    with pytest.raises(ValueError):
        solve_inner(2)
    with pytest.raises(ValueError):
        solve_inner(5, tol_kkt=1e-3)
    with pytest.raises(ValueError):
        solve_inner(10_001)


def test_iteration_budget_raises():
    with pytest.raises(SolverError) as info:
        solve_inner(6, max_iter=5)
    assert info.value.last is not None or np.isnan(info.value.residual) or info.value.residual > 0


def test_json_roundtrip(solved):
    res = solved(6)
    back = SolveResult.from_json(json.loads(json.dumps(res.to_json())))
    assert back.e == res.e
    assert back.kkt_residual == res.kkt_residual
    assert back.active == res.active


def test_table_rows():
    rows = asymptotic_table([100, 3, 10])
    assert [r[0] for r in rows] == [3, 10, 100]
    assert len(rows[0]) == len(TABLE_HEADER)
    assert all(np.all(np.isfinite(r[1:])) for r in rows)
    for r in rows:
        n, alpha, nb, n2g = r[:4]
        assert r[7] == pytest.approx(alpha - 2 * nb / n + n2g / n**2, abs=1e-14)


def test_alpha_trend():
    lim = limit_constants()["alpha"]
    gaps = [abs(solve_inner(n).e.alpha - lim) for n in (10, 100, 1000)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_limit_constants_values():
    c = limit_constants()
    assert c["alpha"] == pytest.approx(0.3660254, abs=1e-7)
    assert c["delta"] == pytest.approx(0.6339746, abs=1e-7)
    assert c["n_beta"] == pytest.approx(0.046130, abs=1e-5)
    assert c["lambda1"] == pytest.approx(0.481718, abs=1e-5)
    assert c["lambda2"] == pytest.approx(0.412153, abs=1e-5)


def test_gamma_limit_is_self_consistent():
    # lambda1 - lambda2 and lambda2 - lambda3 fix n^2 gamma in the limit:
    # lambda1 ~ a + 2 n beta + n^2 gamma / 2, lambda2 ~ a + n beta, lambda3 ~ a
    c = limit_constants()
    n2g = 2 * (c["lambda1"] - 2 * c["lambda2"] + c["lambda3"])
    assert n2g == pytest.approx(0.04687, abs=1e-4)
    res = solve_inner(2000)
    assert 2000**2 * res.e.gamma == pytest.approx(n2g, abs=1e-3)
