import json
from math import comb

import numpy as np
import pytest

from metric_ellipsoids.pairspace import num_pairs, star, unit
from metric_ellipsoids.symellipsoid import (
    SymEllipsoid,
    bound_norm_sq,
    degree_projection,
    from_spectrum,
    inv_norm,
    materialize,
    matvec,
    multiplicities,
    spectral_project,
    spectral_weights,
    spectrum,
    triangle_norm_sq,
    triangle_vector,
)


def random_ellipsoid(rng, n):
    """Positive definite by construction: random positive spectrum mapped back."""
    lam = rng.uniform(0.1, 2.0, 3)
    return from_spectrum(n, *lam, delta=rng.uniform(0.2, 0.8))


@pytest.mark.parametrize(
    "n,abc,lam",
    [(6, (2, 0, 0), (2, 2, 2)), (6, (0, 1, 0), (8, 2, -2)), (5, (1, 1, 1), (10, 0, 0))],
)
def test_spectrum_examples(n, abc, lam):
    assert np.allclose(spectrum(SymEllipsoid(n, *abc)), lam)


def test_trace_identity():
    m = multiplicities(6)
    assert np.dot(m, spectrum(SymEllipsoid(6, 0, 1, 0))) == pytest.approx(0)
    for n in range(3, 12):
        assert sum(multiplicities(n)) == num_pairs(n)
    assert multiplicities(3)[2] == 0 and multiplicities(4)[2] == 2


@pytest.mark.parametrize("n", range(4, 13))
def test_dense_eigenvalues(n):
    rng = np.random.default_rng(n)
    m = multiplicities(n)
    for _ in range(20):
        e = SymEllipsoid(n, *rng.standard_normal(3))
        want = np.sort(np.repeat(spectrum(e), m))
        assert np.allclose(np.linalg.eigvalsh(materialize(e)), want, atol=1e-10, rtol=0)


def test_matvec_examples():
    x = np.random.default_rng(0).random(10)
    assert np.array_equal(matvec(SymEllipsoid(5, 1, 0, 0), x), x)
    assert matvec(SymEllipsoid(4, 0, 1, 0), unit(4, 1, 2)).tolist() == [0, 1, 1, 1, 1, 0]


@pytest.mark.parametrize("n", [3, 4, 7, 12])
def test_matvec_matches_dense(n):
    rng = np.random.default_rng(n)
    e = SymEllipsoid(n, *rng.standard_normal(3))
    X = rng.standard_normal((5, num_pairs(n)))
    assert np.allclose(matvec(e, X), X @ materialize(e), atol=1e-12, rtol=0)


def test_materialize_small():
    A = materialize(SymEllipsoid(3, 2.0, 0.5, 9.0))
    assert np.array_equal(A, np.array([[2, 0.5, 0.5], [0.5, 2, 0.5], [0.5, 0.5, 2]]))
    assert materialize(SymEllipsoid(4, 1, 2, 3))[0, 5] == 3
    with pytest.raises(ValueError):
        materialize(SymEllipsoid(31, 1, 0, 0))


def test_spectral_project_examples():
    n = 6
    ones = np.ones(num_pairs(n))
    assert np.allclose(spectral_project(n, ones), (np.linalg.norm(ones), 0, 0), atol=1e-12)
    s12 = star(n, 1) - star(n, 2)
    assert np.allclose(spectral_project(n, s12), (0, np.linalg.norm(s12), 0), atol=1e-12)
    xi = unit(n, 1, 2) - unit(n, 2, 3) + unit(n, 3, 4) - unit(n, 1, 4)
    assert np.allclose(spectral_project(n, xi), (0, 0, 2), atol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 9])
def test_pythagoras_and_idempotence(n):
    rng = np.random.default_rng(n)
    x = rng.standard_normal(num_pairs(n))
    p = spectral_project(n, x)
    assert np.sum(np.square(p)) == pytest.approx(x @ x, rel=1e-10)
    y = degree_projection(n, x)
    assert np.allclose(degree_projection(n, y), y, atol=1e-12)
    s12 = star(n, 1) - star(n, 2)
    assert np.allclose(degree_projection(n, s12), s12, atol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 6, 10])
def test_inv_norm(n):
    rng = np.random.default_rng(n)
    e = random_ellipsoid(rng, n)
    u = rng.standard_normal((50, num_pairs(n)))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    assert np.allclose(inv_norm(e, matvec(e, u)), 1.0, atol=1e-10)
    ones = np.ones(num_pairs(n))
    assert inv_norm(e, ones) == pytest.approx(np.linalg.norm(ones) / spectrum(e).lambda1)
    x = rng.standard_normal(num_pairs(n))
    assert inv_norm(e, x) == pytest.approx(np.linalg.norm(np.linalg.solve(materialize(e), x)), rel=1e-10)
    with pytest.raises(ValueError):
        inv_norm(SymEllipsoid(n, 0, 1, 0), x)


def test_norm_examples():
    for n in range(3, 8):
        assert triangle_norm_sq(SymEllipsoid(n, 1, 0, 0)) == 3
        assert bound_norm_sq(SymEllipsoid(n, 1, 0, 0)) == 1
    assert bound_norm_sq(SymEllipsoid(5, 0, 0, 1)) == 3
    a, b, n = 0.7, 0.2, 9
    poly = 3 * a * a - 4 * a * b + 4 * (n - 2) * b * b - 4 * (n - 3) * b * b + (comb(n, 2) - 3) * b * b
    assert triangle_norm_sq(SymEllipsoid(n, a, b, b)) == pytest.approx(poly)


@pytest.mark.parametrize("n", range(3, 11))
def test_norms_match_matvec(n):
    rng = np.random.default_rng(100 + n)
    t, e12 = triangle_vector(n), unit(n, 1, 2)
    wt, we = spectral_weights(n)
    for _ in range(50):
        e = SymEllipsoid(n, *rng.standard_normal(3))
        lam2 = np.square(spectrum(e))
        assert triangle_norm_sq(e) == pytest.approx(np.sum(matvec(e, t) ** 2), abs=1e-12, rel=1e-12)
        assert bound_norm_sq(e) == pytest.approx(np.sum(matvec(e, e12) ** 2), abs=1e-12, rel=1e-12)
        assert triangle_norm_sq(e) == pytest.approx(wt @ lam2, rel=1e-10, abs=1e-12)
        assert bound_norm_sq(e) == pytest.approx(we @ lam2, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 20])
def test_from_spectrum_inverts(n):
    e = SymEllipsoid(n, 0.4, 0.03, 0.01 if n > 3 else 0.0, 0.6)
    back = from_spectrum(n, *spectrum(e), delta=0.6)
    assert np.allclose([back.alpha, back.beta, back.gamma], [e.alpha, e.beta, e.gamma], atol=1e-14)


def test_json_roundtrip():
    e = SymEllipsoid(7, 0.37, 0.01, 0.002, 0.63)
    d = json.loads(json.dumps(e.to_json()))
    assert SymEllipsoid.from_json(d) == e
    assert d["lambda"] == list(spectrum(e))


def test_scaled():
    e = SymEllipsoid(5, 0.3, 0.02, 0.01, 0.6)
    assert np.allclose(spectrum(e.scaled(2.0)), 2 * np.array(spectrum(e)))
    assert e.scaled(2.0).delta == e.delta
