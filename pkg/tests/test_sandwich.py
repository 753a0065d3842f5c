import json
from math import sqrt

import numpy as np
import pytest

from metric_ellipsoids.pairspace import num_pairs, random_permutation, unit
from metric_ellipsoids.polytope import build_facets, cut_matrix, membership, triangle
from metric_ellipsoids.sandwich import (
    LOWER_CONSTANT,
    SandwichReport,
    boundary_samples,
    containment_audit,
    contact_points,
    corner_dilations,
    dilation_of_point,
    min_coordinate_point,
    min_distance,
    permuted_contact,
    r_lower,
    r_upper,
    sandwich_report,
    scan_cuts,
    tangency,
    triangle_image_pattern,
)
from metric_ellipsoids.symellipsoid import matvec


def test_lower_constant():
    assert LOWER_CONSTANT == pytest.approx(3**0.75 * sqrt(5 + sqrt(3)) / 6, abs=1e-15)
    assert LOWER_CONSTANT == pytest.approx(0.985776, abs=1e-4)


def test_dilation_basics(solved):
    e = solved(6).e
    assert dilation_of_point(e, e.center()) == 0
    rng = np.random.default_rng(0)
    u = rng.standard_normal((20, e.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    assert np.allclose(dilation_of_point(e, boundary_samples(e, 20, rng)), 1, atol=1e-10)


@pytest.mark.parametrize("n", range(3, 13))
def test_half_cut_is_largest(solved, n):
    e = solved(n).e
    scan = scan_cuts(e)
    assert scan.half_cut_is_max
    assert scan.max_dilation <= r_lower(e) + 1e-8
    assert r_lower(e) <= r_upper(e)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 8])
def test_corners_inside_upper(solved, n):
    e = solved(n).e
    assert corner_dilations(e, samples=5000).max() <= r_upper(e) + 1e-9
    # the all-zero corner is the farthest 0/1 point from the center
    N = num_pairs(n)
    assert np.linalg.norm(e.center()) == pytest.approx(sqrt(N) * e.delta)


@pytest.mark.parametrize("n", [50, 100])
def test_normalised_bounds_range(solved, n):
    e = solved(n).e
    assert 0.95 <= r_lower(e) / n <= 1.25
    assert 0.95 <= r_upper(e) / n <= 1.25


@pytest.mark.parametrize("n", range(3, 51))
def test_min_distance_identity(solved, n):
    e = solved(n).e
    assert abs(min_distance(e) - (2 * e.delta - 1)) <= 1e-9
    assert 0 < min_distance(e) < 1


def test_min_distance_attained(solved):
    e = solved(7).e
    x = min_coordinate_point(e)
    assert abs(x[0] - min_distance(e)) <= 1e-12
    assert dilation_of_point(e, x) == pytest.approx(1, abs=1e-12)


def test_min_distance_monte_carlo(solved):
    e = solved(3).e
    X = boundary_samples(e, 100_000, np.random.default_rng(7))
    sampled = X[:, 0].min()
    assert sampled >= min_distance(e) - 1e-12
    assert sampled - min_distance(e) <= 1e-4


@pytest.mark.parametrize("n", [3, 4, 6, 10, 40])
def test_contact_points(solved, n):
    e = solved(n).e
    p, q = contact_points(e)
    tg = tangency(e, p, q)
    assert tg.residual() <= 1e-7
    fs = build_facets(n)
    assert membership(fs, p).worst_violation <= 1e-8
    assert membership(fs, q).worst_violation <= 1e-8
    assert q[0] == pytest.approx(1, abs=1e-12)


def test_triangle_image_pattern(solved):
    for n in (4, 6, 9):
        e = solved(n).e
        pat = triangle_image_pattern(e)
        assert np.allclose(pat["short"], -e.alpha)
        assert np.allclose(pat["long"], e.alpha - 2 * e.beta)
        assert np.allclose(pat["apex"], e.gamma - 2 * e.beta)
        assert np.allclose(pat["rest"], -e.gamma)
        assert len(pat["apex"]) == n - 3


def test_permuted_contacts(solved):
    n = 7
    e = solved(n).e
    p, _ = contact_points(e)
    rng = np.random.default_rng(11)
    for _ in range(100):
        sigma = random_permutation(n, rng)
        y, (i, j, k) = permuted_contact(e, sigma)
        assert dilation_of_point(e, y) == pytest.approx(1, abs=1e-10)
        # y lies on the facet x_ik <= x_ij + x_jk
        c = triangle(n, i, j, k)
        assert abs(sum(v * y[f] for f, v in c.a.items())) <= 1e-10
        assert sorted(y) == pytest.approx(sorted(p))


@pytest.mark.parametrize("n", [4, 10])
def test_audit_passes(solved, n):
    rec = containment_audit(solved(n).e, samples=2000, seed=1)
    assert rec.passed and rec.min_slack >= -1e-9
    assert len(rec.rows) == 2000
    assert abs(rec.contact_triangle_slack) <= 1e-7 and abs(rec.contact_bound_slack) <= 1e-7


def test_audit_catches_inflation(solved):
    e = solved(6).e.scaled(1.01)
    rec = containment_audit(e, samples=2000, seed=3)
    assert not rec.passed
    assert rec.contact_triangle_slack < 0 and rec.contact_bound_slack < 0


def test_audit_deterministic(solved):
    e = solved(5).e
    a = containment_audit(e, samples=500, seed=9)
    b = containment_audit(e, samples=500, seed=9)
    assert a.rows == b.rows


def test_audit_guard(solved):
    with pytest.raises(ValueError):
        containment_audit(solved(41).e, samples=10)


def test_report_and_json():
    rep = sandwich_report(6, samples=500)
    d = json.loads(json.dumps(rep.to_json()))
    for key in ("n", "inner", "outer_radius", "shrink_factor", "r_upper", "r_lower", "min_distance",
                "contact_triangle", "contact_bound", "kkt_residual"):
        assert key in d
    back = SandwichReport.from_json(d)
    assert back.inner == rep.inner
    assert np.array_equal(back.contact_triangle, rep.contact_triangle)
    assert back.tangency.residual() == rep.tangency.residual()
    assert d["audit"]["passed"] and d["half_cut_is_max"]


def test_report_large_n_skips_audit():
    rep = sandwich_report(60)
    assert rep.audit is None and rep.cut_scan is None
