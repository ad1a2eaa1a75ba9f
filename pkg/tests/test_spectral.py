import warnings

import numpy as np
import pytest
from numpy import testing

from mixhess.errors import DomainError
from mixhess.model.spectral import SymTensor, eigen, eigen_batch, eigen_wrt_metric, metric_sqrt_inverse
from mixhess.utils import random_symmetric


def test_identity():
    lam, _ = eigen(SymTensor.identity(3))
    testing.assert_allclose(lam.values, np.ones(3))


def test_diagonal_has_axis_eigenvectors():
    lam, v = eigen(SymTensor(np.diag([1.0, 2.0, 3.0])))
    testing.assert_allclose(lam.values, [1, 2, 3])
    testing.assert_allclose(np.abs(v), np.eye(3), atol=1e-14)


def test_block_matrix():
    lam, _ = eigen(SymTensor([[2, 1, 0], [1, 2, 0], [0, 0, 5]]))
    testing.assert_allclose(lam.values, [1, 3, 5], atol=1e-13)


def test_upper_triangle_is_authoritative():
    w = SymTensor([[1.0, 2.0], [-7.0, 3.0]])
    testing.assert_array_equal(np.asarray(w), [[1, 2], [2, 3]])


def test_non_square_and_non_finite_inputs():
    with pytest.raises(DomainError):
        SymTensor(np.ones((2, 3)))
    with pytest.raises(DomainError):
        eigen_batch(np.full((3, 3), np.inf))


def cofactor_det(a):
    return (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]) - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
            + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))


def test_eigenvalues_preserve_trace_and_determinant(rng):
    for _ in range(20):
        a = random_symmetric(3, rng)
        lam, _ = eigen(SymTensor(a))
        scale = 1 + np.max(np.abs(a))
        assert np.sum(lam.values) == pytest.approx(np.trace(a), abs=1e-12 * scale)
        assert np.prod(lam.values) == pytest.approx(cofactor_det(a), abs=1e-12 * scale ** 3)


def test_tiny_off_diagonal_rotations_stay_finite():
    w = np.array([[[0.0, 1e-10], [1e-10, 1.0]], [[1.0, 1e-10], [1e-10, 0.0]], [[2.0, 0.0], [0.0, 2.0]]])
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        lam, v = eigen_batch(w)
    testing.assert_allclose(lam, [[0, 1], [0, 1], [2, 2]], atol=1e-12)
    testing.assert_allclose(v @ (lam[..., np.newaxis] * np.swapaxes(v, -1, -2)), w, atol=1e-12)


def test_zero_matrix():
    lam, v = eigen(SymTensor(np.zeros((4, 4))))
    testing.assert_array_equal(lam.values, np.zeros(4))
    testing.assert_array_equal(v, np.eye(4))


@pytest.mark.parametrize('n', [2, 3, 4, 6])
def test_decomposition_reconstructs(rng, n):
    for _ in range(20):
        w = random_symmetric(n, rng)
        decomposition = eigen(SymTensor(w))
        lam, v = decomposition
        assert np.all(np.diff(lam.values) >= 0)
        testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-12)
        testing.assert_allclose(decomposition.reconstruct(), w, atol=1e-12)
        testing.assert_allclose(lam.values, np.linalg.eigvalsh(w), atol=1e-12)


def test_batch_matches_single(rng):
    w = np.stack([random_symmetric(3, rng) for _ in range(10)]).reshape(2, 5, 3, 3)
    lam, v = eigen_batch(w)
    assert lam.shape == (2, 5, 3) and v.shape == (2, 5, 3, 3)
    testing.assert_allclose(lam[1, 2], eigen(SymTensor(w[1, 2])).eigenvalues.values, atol=1e-14)


def test_repeated_eigenvalues(rng):
    q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    w = q @ np.diag([2.0, 2.0, 2.0, -1.0]) @ q.T
    lam, v = eigen(SymTensor(w))
    testing.assert_allclose(lam.values, [-1, 2, 2, 2], atol=1e-12)
    testing.assert_allclose(v @ np.diag(lam.values) @ v.T, w, atol=1e-12)


@pytest.mark.parametrize('g, expected', [
    (np.eye(3), np.eye(3)),
    (4 * np.eye(3), 0.5 * np.eye(3)),
    (np.diag([1.0, 4.0, 9.0]), np.diag([1, 1 / 2, 1 / 3])),
])
def test_metric_sqrt_inverse(g, expected):
    testing.assert_allclose(np.asarray(metric_sqrt_inverse(SymTensor(g))), expected, atol=1e-14)


def test_metric_sqrt_inverse_squares_to_inverse(rng):
    a = rng.standard_normal((3, 3))
    g = a @ a.T + np.eye(3)
    gamma = np.asarray(metric_sqrt_inverse(SymTensor(g)))
    testing.assert_allclose(gamma @ gamma, np.linalg.inv(g), atol=1e-12)


def test_metric_must_be_positive_definite():
    with pytest.raises(DomainError):
        metric_sqrt_inverse(SymTensor(np.diag([1.0, 0.0, 2.0])))
    with pytest.raises(DomainError):
        metric_sqrt_inverse(SymTensor(np.diag([1.0, -1.0])))


def test_eigen_wrt_metric(rng):
    w = SymTensor(random_symmetric(3, rng))
    testing.assert_array_equal(eigen_wrt_metric(w, SymTensor.identity(3)).eigenvalues.values,
                               eigen(w).eigenvalues.values)
    a = rng.standard_normal((3, 3))
    g = SymTensor(a @ a.T + np.eye(3))
    testing.assert_allclose(eigen_wrt_metric(g, g).eigenvalues.values, np.ones(3), atol=1e-12)
    lam = eigen_wrt_metric(SymTensor.identity(3, 2), SymTensor.identity(3, 4)).eigenvalues.values
    testing.assert_allclose(lam, [0.5, 0.5, 0.5])
