import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from affine_flow import mat3
from affine_flow.errors import NotSymmetric, SingularMatrix

from oracles import cofactor_by_inverse, random_rotation

entries = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
matrices = arrays(np.float64, (3, 3), elements=entries)

BLOCK_EXAMPLE = np.array([[5.0, 0, 0], [0, 5, 1], [0, -1, 0]])


def test_det_examples():
    assert mat3.det(np.diag([1.0, 2, 3])) == 6.0
    assert mat3.det(np.eye(3)) == 1.0
    assert mat3.det(BLOCK_EXAMPLE) == 5.0


def test_cof_examples():
    np.testing.assert_array_equal(mat3.cof(np.diag([1.0, 2, 3])), np.diag([6.0, 3, 2]))
    np.testing.assert_array_equal(mat3.cof(np.eye(3)), np.eye(3))
    np.testing.assert_array_equal(mat3.cof(BLOCK_EXAMPLE), [[1, 0, 0], [0, 0, 5], [0, -5, 25]])


def test_cof_matches_inverse_formula():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.uniform(-2, 2, (3, 3))
        np.testing.assert_allclose(mat3.cof(a), cofactor_by_inverse(a), rtol=1e-9, atol=1e-12)


def test_inv_examples():
    np.testing.assert_array_equal(mat3.inv(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(mat3.inv(2 * np.eye(3)), 0.5 * np.eye(3))
    np.testing.assert_allclose(mat3.inv(np.diag([1.0, 2, 4])), np.diag([1, 0.5, 0.25]))


def test_inv_singular():
    with pytest.raises(SingularMatrix):
        mat3.inv(np.diag([1.0, 1, 0]))
    with pytest.raises(SingularMatrix):
        mat3.inv(np.ones((3, 3)))


def test_as_mat3_parsing_and_finiteness():
    np.testing.assert_array_equal(mat3.as_mat3(range(9)), np.arange(9.0).reshape(3, 3))
    with pytest.raises(ValueError):
        mat3.as_mat3([1, 2, 3])
    with pytest.raises(ValueError):
        mat3.as_mat3([np.nan] + [0] * 8)
    with pytest.raises(ValueError):
        mat3.as_mat3([np.inf] + [0] * 8)


def test_outer_and_basis():
    m = mat3.outer(mat3.basis(2), mat3.basis(1))
    assert m[1, 0] == 1.0 and np.count_nonzero(m) == 1


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_cofactor_identity(a):
    err = np.max(np.abs(mat3.cof(a).T @ a - mat3.det(a) * np.eye(3)))
    assert err <= 1e-12 * (1 + mat3.operator_norm(a) ** 2)


@settings(max_examples=200, deadline=None)
@given(matrices, matrices)
def test_det_multiplicative(a, b):
    lhs = mat3.det(a @ b)
    rhs = mat3.det(a) * mat3.det(b)
    scale = (np.linalg.norm(a) * np.linalg.norm(b)) ** 3
    assert abs(lhs - rhs) <= 1e-11 * max(abs(rhs), 1e-3 * scale, 1e-300)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_double_inverse(a):
    try:
        back = mat3.inv(mat3.inv(a))
    except SingularMatrix:
        return
    cond = np.linalg.cond(a)
    if cond > 1e5:
        return
    np.testing.assert_allclose(back, a, rtol=0, atol=1e-9 * max(1.0, np.abs(a).max()))


def test_inv_product_is_identity():
    rng = np.random.default_rng(1)
    for _ in range(100):
        a = rng.uniform(-2, 2, (3, 3))
        if np.linalg.cond(a) > 1e6:
            continue
        np.testing.assert_allclose(a @ mat3.inv(a), np.eye(3), atol=1e-10 * np.linalg.cond(a))


def test_sym_eigen_examples():
    sp = mat3.sym_eigen(np.diag([1.0, 9, 4]))
    np.testing.assert_allclose(sp.eigenvalues, [9, 4, 1])
    np.testing.assert_allclose(np.abs(sp.frame), np.eye(3)[:, [1, 2, 0]], atol=1e-12)
    sp = mat3.sym_eigen(np.eye(3))
    np.testing.assert_allclose(sp.eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(sp.frame.T @ sp.frame, np.eye(3), atol=1e-12)
    a = np.array([[0.0, 1, 0], [-1, 0, 0], [0, 0, 2]])
    np.testing.assert_allclose(mat3.sym_eigen(a @ a.T).eigenvalues, [4, 1, 1], atol=1e-12)


def test_sym_eigen_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        mat3.sym_eigen(np.array([[1.0, 1, 0], [0, 1, 0], [0, 0, 1]]))


def _check_spectrum(s):
    sp = mat3.sym_eigen(s)
    scale = max(np.abs(s).max(), 1e-300)
    assert np.all(np.diff(sp.eigenvalues) <= 0)
    np.testing.assert_allclose(sp.frame.T @ sp.frame, np.eye(3), atol=1e-12)
    assert np.max(np.abs(sp.reconstruct() - s)) <= 1e-12 * scale
    return sp


@settings(max_examples=300, deadline=None)
@given(matrices)
def test_sym_eigen_reconstruction(a):
    _check_spectrum(0.5 * (a + a.T))


def test_sym_eigen_clustered_and_spd():
    rng = np.random.default_rng(2)
    for gap in (0.0, 1e-14, 1e-10, 1e-9, 1e-6):
        q = random_rotation(rng)
        s = q @ np.diag([2.0, 2.0 + gap, 1.0]) @ q.T
        _check_spectrum(0.5 * (s + s.T))
    for _ in range(50):
        a = rng.normal(size=(3, 3))
        sp = _check_spectrum(a @ a.T + 1e-3 * np.eye(3))
        assert np.all(sp.eigenvalues > 0)


def test_operator_norm_examples():
    assert mat3.operator_norm(np.eye(3)) == pytest.approx(1.0)
    assert mat3.operator_norm(np.diag([3.0, -2, 1])) == pytest.approx(3.0)
    u = np.array([1.0, 2, 2]) / 3
    v = np.array([0.0, 0.6, 0.8])
    assert mat3.operator_norm(np.outer(u, v)) == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(matrices)
def test_operator_norm_bounds(a):
    n = mat3.operator_norm(a)
    e = mat3.euclidean_norm(a)
    assert e / np.sqrt(3) - 1e-12 <= n <= e + 1e-12
    assert n == pytest.approx(np.linalg.norm(a, 2), rel=1e-9, abs=1e-12)


def test_stack_helpers_match_scalar_versions():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(20, 3, 3))
    np.testing.assert_allclose(mat3.det_many(a), [mat3.det(x) for x in a], rtol=1e-13, atol=1e-14)
    np.testing.assert_allclose(mat3.cof_many(a), [mat3.cof(x) for x in a], rtol=1e-13, atol=1e-14)


def test_sym_eigen_matches_lapack():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = rng.normal(size=(3, 3))
        s = a @ a.T
        np.testing.assert_allclose(mat3.sym_eigen(s).eigenvalues, np.linalg.eigh(s)[0][::-1], rtol=1e-10, atol=1e-12)
