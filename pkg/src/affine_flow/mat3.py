"""Fixed-size 3x3 linear algebra.

Matrices are plain ``numpy`` arrays of shape ``(3, 3)``.  The scalar kernels
(``det3``, ``cof3``, ...) are compiled with numba so the time steppers can call
them from inside their loops; the public wrappers add validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DomainError, NotSymmetric, SingularMatrix

EPS = np.finfo(float).eps
SINGULAR_RTOL = 1e-14
CLUSTER_RTOL = 1e-8


# ---------------------------------------------------------------- kernels


@numba.njit(cache=True)
def det3(a):
    return (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )


@numba.njit(cache=True)
def cof3(a):
    c = np.empty((3, 3))
    c[0, 0] = a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
    c[0, 1] = a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2]
    c[0, 2] = a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]
    c[1, 0] = a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2]
    c[1, 1] = a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
    c[1, 2] = a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1]
    c[2, 0] = a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]
    c[2, 1] = a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]
    c[2, 2] = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return c


@numba.njit(cache=True)
def inv_transpose3(a):
    """A^{-T} = cof(A) / det(A); no singularity check."""
    return cof3(a) / det3(a)


@numba.njit(cache=True)
def matmul3(a, b):
    c = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += a[i, k] * b[k, j]
            c[i, j] = s
    return c


@numba.njit(cache=True)
def trace3(a):
    return a[0, 0] + a[1, 1] + a[2, 2]


@numba.njit(cache=True)
def frob_inner(a, b):
    s = 0.0
    for i in range(3):
        for j in range(3):
            s += a[i, j] * b[i, j]
    return s


# ---------------------------------------------------------------- public API


def as_mat3(a, name="matrix") -> np.ndarray:
    """Coerce ``a`` (nested rows or 9 row-major numbers) to a finite 3x3 array."""
    arr = np.array(a, dtype=float)
    if arr.shape == (9,):
        arr = arr.reshape(3, 3)
    if arr.shape != (3, 3):
        raise DomainError(f"{name} must be 3x3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def outer(u, v) -> np.ndarray:
    """u ⊗ v = u vᵀ."""
    return np.outer(np.asarray(u, float), np.asarray(v, float))


def basis(i: int) -> np.ndarray:
    """Standard basis vector e_i, 1-based as in e₁, e₂, e₃."""
    e = np.zeros(3)
    e[i - 1] = 1.0
    return e


def det(a) -> float:
    return float(det3(as_mat3(a)))


def cof(a) -> np.ndarray:
    """Matrix of signed 2x2 minors, so that cof(A)ᵀ A = det(A) I."""
    return cof3(as_mat3(a))


def euclidean_norm(a) -> float:
    """|A| = (tr A Aᵀ)^{1/2}."""
    return float(math.sqrt(np.sum(np.square(a))))


def inv(a, singular_rtol: float = SINGULAR_RTOL) -> np.ndarray:
    a = as_mat3(a)
    d = det3(a)
    threshold = singular_rtol * operator_norm(a) ** 3
    if not abs(d) > threshold:
        raise SingularMatrix(f"|det A| = {abs(d):.3e} is below {threshold:.3e}")
    return cof3(a).T / d


@dataclass(frozen=True)
class SymSpectrum:
    """Eigen-decomposition of a symmetric matrix.

    ``eigenvalues`` are sorted in descending order and column ``k`` of
    ``frame`` is the unit eigenvector for ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    frame: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.frame @ np.diag(self.eigenvalues) @ self.frame.T


def _closed_form_eigenvalues(s, scale):
    q = np.trace(s) / 3.0
    off = s[0, 1] ** 2 + s[0, 2] ** 2 + s[1, 2] ** 2
    p2 = (s[0, 0] - q) ** 2 + (s[1, 1] - q) ** 2 + (s[2, 2] - q) ** 2 + 2.0 * off
    if p2 <= (EPS * scale) ** 2:
        return np.array([q, q, q])
    p = math.sqrt(p2 / 6.0)
    b = (s - q * np.eye(3)) / p
    r = min(1.0, max(-1.0, det3(b) / 2.0))
    phi = math.acos(r) / 3.0
    l1 = q + 2.0 * p * math.cos(phi)
    l3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    l2 = 3.0 * q - l1 - l3
    return np.sort(np.array([l1, l2, l3]))[::-1]


def _null_vector(m):
    rows = (m[0], m[1], m[2])
    best = np.zeros(3)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        c = np.cross(rows[i], rows[j])
        if c @ c > best @ best:
            best = c
    n = math.sqrt(best @ best)
    return best / n if n > 0 else None


def _jacobi(s, v, scale, max_sweeps=50):
    s = s.copy()
    v = v.copy()
    for _ in range(max_sweeps):
        off = math.sqrt(s[0, 1] ** 2 + s[0, 2] ** 2 + s[1, 2] ** 2)
        if off <= EPS * scale:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            if abs(s[p, q]) <= 1e-6 * EPS * scale:
                s[p, q] = s[q, p] = 0.0
                continue
            theta = (s[q, q] - s[p, p]) / (2.0 * s[p, q])
            if abs(theta) > 1e150:
                t = 0.5 / theta
            else:
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            sn = t * c
            rot = np.eye(3)
            rot[p, p] = c
            rot[q, q] = c
            rot[p, q] = sn
            rot[q, p] = -sn
            s = rot.T @ s @ rot
            v = v @ rot
    lam = np.diag(s).copy()
    order = np.argsort(lam)[::-1]
    return lam[order], v[:, order]


def sym_eigen(s, symmetry_tol: float = 1e-10) -> SymSpectrum:
    """Eigenvalues (descending) and an orthonormal eigenframe of a symmetric 3x3.

    Uses the trigonometric closed form; falls back to cyclic Jacobi rotations
    when eigenvalues cluster within ``CLUSTER_RTOL`` of the spectral scale or
    when the closed-form frame fails the reconstruction check.
    """
    s = as_mat3(s)
    scale = float(np.max(np.abs(s)))
    if np.max(np.abs(s - s.T)) > symmetry_tol * max(1.0, scale):
        raise NotSymmetric("input matrix is not symmetric")
    s = 0.5 * (s + s.T)
    if scale == 0.0:
        return SymSpectrum(np.zeros(3), np.eye(3))

    # work at unit scale so squares neither overflow nor underflow
    u = s / scale
    lam, frame = _unit_scale_eigen(u)
    return SymSpectrum(lam * scale, frame)


def _unit_scale_eigen(s):
    lam = _closed_form_eigenvalues(s, 1.0)
    gaps = -np.diff(lam)
    if np.min(gaps) > CLUSTER_RTOL:
        v1 = _null_vector(s - lam[0] * np.eye(3))
        v3 = _null_vector(s - lam[2] * np.eye(3))
        if v1 is not None and v3 is not None:
            v3 = v3 - (v3 @ v1) * v1
            v3 /= np.linalg.norm(v3)
            v2 = np.cross(v3, v1)
            frame = np.column_stack([v1, v2, v3])
            if np.max(np.abs(frame @ np.diag(lam) @ frame.T - s)) <= 1e-13:
                return lam, frame
            return _jacobi(frame.T @ s @ frame, frame, 1.0)
    return _jacobi(s, np.eye(3), 1.0)


def operator_norm(a) -> float:
    """‖A‖, the largest singular value."""
    a = as_mat3(a)
    top = sym_eigen(a.T @ a).eigenvalues[0]
    return math.sqrt(max(top, 0.0))


def require_positive_det(a, what="det A") -> float:
    d = float(det3(a))
    if not d > 0.0:
        raise DomainError(f"{what} must be positive, got {d:.6g}")
    return d


# ---------------------------------------------------------------- stacks


def det_many(a: np.ndarray) -> np.ndarray:
    """Cofactor-expansion determinant over a stack of shape ``(n, 3, 3)``."""
    return (
        a[:, 0, 0] * (a[:, 1, 1] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 1])
        - a[:, 0, 1] * (a[:, 1, 0] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 0])
        + a[:, 0, 2] * (a[:, 1, 0] * a[:, 2, 1] - a[:, 1, 1] * a[:, 2, 0])
    )


def cof_many(a: np.ndarray) -> np.ndarray:
    c = np.empty_like(a)
    c[:, 0, 0] = a[:, 1, 1] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 1]
    c[:, 0, 1] = a[:, 1, 2] * a[:, 2, 0] - a[:, 1, 0] * a[:, 2, 2]
    c[:, 0, 2] = a[:, 1, 0] * a[:, 2, 1] - a[:, 1, 1] * a[:, 2, 0]
    c[:, 1, 0] = a[:, 0, 2] * a[:, 2, 1] - a[:, 0, 1] * a[:, 2, 2]
    c[:, 1, 1] = a[:, 0, 0] * a[:, 2, 2] - a[:, 0, 2] * a[:, 2, 0]
    c[:, 1, 2] = a[:, 0, 1] * a[:, 2, 0] - a[:, 0, 0] * a[:, 2, 1]
    c[:, 2, 0] = a[:, 0, 1] * a[:, 1, 2] - a[:, 0, 2] * a[:, 1, 1]
    c[:, 2, 1] = a[:, 0, 2] * a[:, 1, 0] - a[:, 0, 0] * a[:, 1, 2]
    c[:, 2, 2] = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    return c
