import math

import numpy as np
import pytest

from affine_flow import geometry
from affine_flow.errors import DomainError, ZeroAsymptote
from affine_flow.mat3 import basis, outer
from affine_flow.swirl import SwirlState, embed

from oracles import random_rotation


def test_ellipsoid_examples():
    np.testing.assert_allclose(geometry.ellipsoid_of(np.eye(3)).semi_axes, [1, 1, 1])
    rng = np.random.default_rng(0)
    R = random_rotation(rng)
    np.testing.assert_allclose(geometry.ellipsoid_of(np.diag([3.0, 2, 1]) @ R).semi_axes, [3, 2, 1])
    A = embed(SwirlState(2.0, 0.0, 0.7, 0.0)).A
    np.testing.assert_allclose(geometry.ellipsoid_of(A).semi_axes, [2, 2, 0.25])


def test_degenerate_allowed_and_diameter():
    e = geometry.ellipsoid_of(np.diag([0.0, 2.0, 0.0]))
    np.testing.assert_allclose(e.semi_axes, [2, 0, 0])
    assert e.diameter == 4.0 == geometry.diameter(np.diag([0.0, 2.0, 0.0]))


def test_orientation_columns_are_axes():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(3, 3))
    e = geometry.ellipsoid_of(A)
    S = A @ A.T
    for k in range(3):
        np.testing.assert_allclose(S @ e.orientation[:, k], e.semi_axes[k] ** 2 * e.orientation[:, k], atol=1e-10)


def test_volume():
    assert geometry.volume(np.eye(3)) == pytest.approx(4 * math.pi / 3)
    assert geometry.volume(2 * np.eye(3)) == pytest.approx(32 * math.pi / 3)
    with pytest.raises(DomainError):
        geometry.volume(np.diag([1.0, 1, -1]))


def test_rescaled_domain():
    np.testing.assert_allclose(geometry.rescaled_domain(10 * np.eye(3), 10.0).semi_axes, [1, 1, 1])
    t = 1e6
    A = t * np.diag([1.0, 1, 0]) + np.array([[0, 0, 0], [0, 0, 1.0], [0, -1, 0]])
    np.testing.assert_allclose(geometry.rescaled_domain(A, t).semi_axes, [1, 1, 0], atol=1e-5)
    with pytest.raises(DomainError):
        geometry.rescaled_domain(np.eye(3), 0.0)


def test_classify_examples():
    s = geometry.classify_asymptotic(np.diag([1.0, 2, 3]))
    assert s.rank == 3 and s.label == geometry.ShapeLabel.EGG
    s = geometry.classify_asymptotic(outer(basis(2), basis(1)))
    assert s.rank == 1 and s.label == geometry.ShapeLabel.SAUSAGE
    np.testing.assert_allclose(s.semi_axes, [1.0])
    s = geometry.classify_asymptotic(outer(basis(2), basis(1)) + outer(basis(3), basis(2)))
    assert s.rank == 2 and s.label == geometry.ShapeLabel.PANCAKE


def test_classify_zero_and_tolerance():
    with pytest.raises(ZeroAsymptote):
        geometry.classify_asymptotic(np.zeros((3, 3)))
    with pytest.raises(ZeroAsymptote):
        geometry.classify_asymptotic(1e-3 * np.eye(3), tol=1e-2)
    # a relative default tolerates regression noise in the small axis
    assert geometry.classify_asymptotic(np.diag([1.0, 1.0, 1e-10])).rank == 2


def test_invariances():
    rng = np.random.default_rng(2)
    for _ in range(50):
        A = rng.normal(size=(3, 3))
        R = random_rotation(rng)
        np.testing.assert_allclose(
            geometry.ellipsoid_of(A @ R).semi_axes, geometry.ellipsoid_of(A).semi_axes, rtol=1e-10, atol=1e-12
        )
        lam = geometry.ellipsoid_of(A).semi_axes
        assert lam[0] <= lam.sum() <= 3 * lam[0]
        A1 = A.copy()
        A1[:, rng.integers(3)] = 0
        r = geometry.classify_asymptotic(A1).rank
        assert geometry.classify_asymptotic(2 * A1).rank == r == 2
