"""Shape of the fluid domain A B, where B is the closed unit ball."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, ZeroAsymptote
from .mat3 import as_mat3, det3

RANK_RTOL = 1e-8


@dataclass(frozen=True)
class Ellipsoid:
    semi_axes: np.ndarray
    orientation: np.ndarray

    @property
    def diameter(self) -> float:
        return 2.0 * float(self.semi_axes[0])

    @property
    def volume(self) -> float:
        return 4.0 * math.pi / 3.0 * float(np.prod(self.semi_axes))


class ShapeLabel(str, Enum):
    EGG = "Egg"
    PANCAKE = "Pancake"
    SAUSAGE = "Sausage"


_LABELS = {3: ShapeLabel.EGG, 2: ShapeLabel.PANCAKE, 1: ShapeLabel.SAUSAGE}


@dataclass(frozen=True)
class AsymptoticShape:
    rank: int
    semi_axes: np.ndarray
    label: ShapeLabel


def ellipsoid_of(A) -> Ellipsoid:
    """Principal semi-axes (singular values of A, descending) and their directions.

    Degenerate A is allowed; zero axes describe flattened limits.
    """
    u, s, _ = np.linalg.svd(as_mat3(A))
    return Ellipsoid(semi_axes=s, orientation=u)


def diameter(A) -> float:
    return ellipsoid_of(A).diameter


def volume(A) -> float:
    d = det3(as_mat3(A))
    if d < 0.0:
        raise DomainError(f"volume needs det A >= 0, got {d:.6g}")
    return 4.0 * math.pi / 3.0 * d


def rescaled_domain(A, t: float) -> Ellipsoid:
    """The ellipsoid t^{-1} A B."""
    if not t > 0.0:
        raise DomainError("rescaling time must be positive")
    return ellipsoid_of(as_mat3(A) / t)


def classify_asymptotic(A1, tol: float | None = None) -> AsymptoticShape:
    """Rank and shape of the limit domain A1 B.

    With ``tol=None`` singular values below ``RANK_RTOL`` times the largest
    are treated as zero; otherwise ``tol`` is an absolute threshold.
    """
    s = np.linalg.svd(as_mat3(A1, "A1"), compute_uv=False)
    top = float(s[0])
    threshold = RANK_RTOL * top if tol is None else float(tol)
    if top == 0.0 or top <= threshold:
        raise ZeroAsymptote("asymptotic velocity A1 vanishes")
    rank = int(np.sum(s > threshold))
    return AsymptoticShape(rank=rank, semi_axes=s[:rank].copy(), label=_LABELS[rank])
