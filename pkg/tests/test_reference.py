import numpy as np
import pytest

from helpers import first_warm_user, random_store

from prefwalk.errors import DimensionGuardError
from prefwalk.reference import (DenseSystem, dense_fixed_point, dense_pole_matrices,
                                dense_reference_ranking, stacked_system)


def random_column_stochastic(rng, n):
    x = rng.random((n, n))
    return x / x.sum(axis=0)


def test_system_validation():
    with pytest.raises(ValueError):
        DenseSystem(np.eye(3), np.ones(3) / 3, rate=0.0, split=1)
    with pytest.raises(ValueError):
        DenseSystem(np.eye(3), np.ones(3), rate=0.5, split=1)  # mass 3
    with pytest.raises(ValueError):
        DenseSystem(np.eye(3) * 2.0, np.ones(3) / 3, rate=0.5, split=1)
    with pytest.raises(ValueError):
        DenseSystem(np.ones((2, 3)), np.ones(3) / 3, rate=0.5, split=1)


def test_dimension_guard():
    with pytest.raises(DimensionGuardError):
        DenseSystem(np.zeros((10_001, 10_001)), np.zeros(10_001), rate=0.5, split=1)
    with pytest.raises(DimensionGuardError):
        dense_pole_matrices(51)


def test_rate_one_returns_restart():
    rng = np.random.default_rng(0)
    x = random_column_stochastic(rng, 4)
    v = rng.random(4)
    v /= v.sum()
    system = DenseSystem(x, v, rate=1.0, split=2)
    z = dense_fixed_point(system, tol=1e-15, max_iter=5)
    assert np.abs(z - v).max() <= 1e-15


def test_doubly_stochastic_uniform():
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    v = np.array([0.5, 0.5])
    z = dense_fixed_point(DenseSystem(x, v, rate=0.15, split=1), tol=1e-14, max_iter=500)
    assert np.abs(z - 0.5).max() <= 1e-12


def test_matches_eigensolver():
    rng = np.random.default_rng(5)
    for _ in range(5):
        x = random_column_stochastic(rng, 8)
        v = rng.random(8)
        v /= v.sum()
        rate = 0.15
        system = DenseSystem(x, v, rate=rate, split=4)
        z = dense_fixed_point(system, tol=1e-14, max_iter=5000)
        g = (1 - rate) * x + rate * np.outer(v, np.ones(8))
        vals, vecs = np.linalg.eig(g)
        lead = vecs[:, np.argmax(vals.real)].real
        lead = lead / lead.sum()
        assert np.abs(z - lead).max() <= 1e-8


def test_stacked_system_shape_checks():
    with pytest.raises(ValueError):
        stacked_system(np.ones((2, 3)), np.ones((2, 2)), np.zeros(2), np.ones(2) / 2, 0.5)


def test_pole_matrices_are_stochastic():
    for n in (2, 3, 6):
        w, t = dense_pole_matrices(n)
        assert np.allclose(w.sum(axis=0), 1.0)
        assert np.allclose(t.sum(axis=0), 1.0)
        assert w.shape == (n * (n - 1), 2 * n)
        assert t.shape == (2 * n, n * (n - 1))


def test_reference_ranking_excludes_items():
    store = random_store(np.random.default_rng(2), n_users=4, n_items=5)
    target = first_warm_user(store)
    full = dense_reference_ranking(store, target, k=5)
    banned = dense_reference_ranking(store, target, k=5, exclude={int(full.items[0])})
    assert int(full.items[0]) not in set(int(i) for i in banned.items)
