import numpy as np
from hypothesis import given, strategies as st

from isomono import RationalMatrixFunction

seeds = st.integers(0, 2**31 - 1)


def _random_rmf(rng, centers=(0.0, 1.0 + 0.5j), poly_deg=1):
    terms = {}
    for c in centers:
        for m in (1, 2):
            terms[(c, m)] = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    poly = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(poly_deg + 1)]
    return RationalMatrixFunction(terms, poly)


def _sample_points(rng, k=5):
    return 2 * (rng.uniform(-1, 1, k) + 1j * rng.uniform(-1, 1, k)) + 3j


@given(seeds)
def test_product_matches_pointwise(seed):
    rng = np.random.default_rng(seed)
    f = _random_rmf(rng)
    g = _random_rmf(rng, centers=(1.0 + 0.5j, -2.0))
    h = f @ g
    for z in _sample_points(rng):
        np.testing.assert_allclose(h(z), f(z) @ g(z), rtol=1e-9, atol=1e-9)


@given(seeds)
def test_derivative_matches_difference(seed):
    rng = np.random.default_rng(seed)
    f = _random_rmf(rng)
    d = f.derivative()
    for z in _sample_points(rng, 3):
        h = 1e-5
        fd = (f(z + h) - f(z - h)) / (2 * h)
        np.testing.assert_allclose(d(z), fd, rtol=1e-5, atol=1e-5)


def test_same_center_orders_add():
    a = RationalMatrixFunction({(0.0, 1): np.eye(2)})
    sq = a @ a
    assert sq.max_order(0.0) == 2
    c2, c1, c0 = sq.laurent(0.0)
    np.testing.assert_array_equal(c2, np.eye(2))
    assert not c1.any() and not c0.any()


def test_pole_times_monomial_is_exact():
    # z / (z - 2) = 1 + 2 / (z - 2)
    f = RationalMatrixFunction({(2.0, 1): np.eye(2)}) @ RationalMatrixFunction(poly=[np.zeros((2, 2)), np.eye(2)])
    _, c1, _ = f.laurent(2.0)
    np.testing.assert_allclose(c1, 2 * np.eye(2))
    np.testing.assert_allclose(f.poly[0], np.eye(2))


def test_canonical_and_poles():
    f = RationalMatrixFunction({(1.0, 1): np.eye(2), (2.0, 1): 1e-20 * np.eye(2)}, [np.zeros((2, 2))])
    g = f.canonical(1e-15)
    np.testing.assert_allclose(g.poles, [1.0])
    assert g.poly == []
    assert g.polynomial_norm() == 0.0


def test_sum_and_negation():
    rng = np.random.default_rng(0)
    f, g = _random_rmf(rng), _random_rmf(rng)
    z = 0.3 + 2j
    np.testing.assert_allclose((f - g)(z), f(z) - g(z))
    np.testing.assert_allclose(f.scaled(2j)(z), 2j * f(z))
