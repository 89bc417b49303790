import numpy as np
import pytest

from hiddencorr.linalg import khatri_rao, lstsq, pinv, svd, sym_eig

O = np.array([[1, -0.6, 0.8], [-0.6, 1, 0.8], [0.8, 0.8, 1]])


def test_sym_eig_counterexample():
    w = sym_eig(O).eigenvalues
    np.testing.assert_array_equal(np.round(w, 2), [-0.47, 1.60, 1.87])


def test_sym_eig_trivial():
    np.testing.assert_allclose(sym_eig(np.eye(3)).eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(sym_eig(np.diag([5.0, 2.0])).eigenvalues, [2, 5])


def test_sym_eig_nonsquare():
    with pytest.raises(ValueError):
        sym_eig(np.zeros((2, 3)))


@pytest.mark.parametrize("n", [2, 10, 50, 200])
def test_sym_eig_reconstruction(rng, n):
    a = rng.standard_normal((n, n))
    m = a + a.T
    w, v = sym_eig(m)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(m - (v * w) @ v.T) <= 1e-8 * np.linalg.norm(m)
    assert np.linalg.norm(v.T @ v - np.eye(n)) <= 1e-10
    assert np.max(np.abs(m @ v - v * w)) <= 1e-8 * np.linalg.norm(m)


def test_svd_trivial(rng):
    np.testing.assert_allclose(svd(np.diag([3.0, 1.0])).S, [3, 1])
    a, b = rng.standard_normal(4), rng.standard_normal(3)
    s = svd(np.outer(a, b)).S
    assert np.isclose(s[0], np.linalg.norm(a) * np.linalg.norm(b))
    assert np.all(s[1:] < 1e-12)


def test_svd_reconstruction(rng):
    m = rng.standard_normal((5, 3))
    u, s, v = svd(m)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert np.linalg.norm(m - (u * s) @ v.T) <= 1e-10
    np.testing.assert_allclose(u.T @ u, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-12)


def test_lstsq_trivial(rng):
    b = rng.standard_normal((3, 2))
    np.testing.assert_allclose(lstsq(np.eye(3), b), b)
    np.testing.assert_allclose(lstsq([[1.0], [1.0]], [[1.0], [3.0]]), [[2.0]])


def test_lstsq_residual_orthogonal(rng):
    a, b = rng.standard_normal((20, 4)), rng.standard_normal((20, 3))
    x = lstsq(a, b)
    assert np.max(np.abs(a.T @ (a @ x - b))) <= 1e-9
    np.testing.assert_allclose(x, pinv(a) @ b, atol=1e-8)


def test_lstsq_min_norm_when_rank_deficient():
    a = np.array([[1.0, 1.0], [1.0, 1.0]])
    x = lstsq(a, np.array([[2.0], [2.0]]))
    np.testing.assert_allclose(x, [[1.0], [1.0]])


def test_lstsq_shape_mismatch():
    with pytest.raises(ValueError):
        lstsq(np.eye(3), np.ones((2, 1)))


def test_pinv_trivial():
    np.testing.assert_allclose(pinv(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))


@pytest.mark.parametrize("shape", [(5, 3), (3, 5), (4, 4)])
def test_pinv_penrose(rng, shape):
    m = rng.standard_normal(shape)
    p = pinv(m)
    assert np.allclose(m @ p @ m, m, atol=1e-9)
    assert np.allclose(p @ m @ p, p, atol=1e-9)
    assert np.allclose((m @ p).T, m @ p, atol=1e-9)
    assert np.allclose((p @ m).T, p @ m, atol=1e-9)


def test_khatri_rao():
    a = np.array([[1.0], [2.0]])
    np.testing.assert_array_equal(khatri_rao(a, a).ravel(), [1, 2, 2, 4])


def test_khatri_rao_loop_oracle(rng):
    a, b = rng.standard_normal((3, 2)), rng.standard_normal((4, 2))
    k = khatri_rao(a, b)
    for r in range(2):
        np.testing.assert_array_equal(k[:, r], np.kron(a[:, r], b[:, r]))
    for i in range(3):
        for j in range(4):
            np.testing.assert_array_equal(k[i * 4 + j], a[i] * b[j])
    with pytest.raises(ValueError):
        khatri_rao(a, np.ones((2, 3)))
