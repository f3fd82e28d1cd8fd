"""Radial vacuum data and the fluid fields carried by an affine motion.

A profile ``rho0`` on [0, 1] vanishing like ``(1 - s)^delta`` at s = 1
determines the internal energy ``eps0(s) = int_s^1 r rho0(r) dr / ((gamma-1) rho0(s))``
and the pressure ``p0 = (gamma-1) rho0 eps0``, which satisfies ``p0' = -s rho0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .dynamics import PhaseState, incomp_lambda
from .errors import DomainError, NotOnBoundary, OutsideDomain, QuadratureFailure
from .mat3 import as_mat3, det3, inv

BOUNDARY_LAYER = 1e-6  # eps0 uses its linear boundary expansion within this distance of s = 1
BOUNDARY_TOL = 1e-12  # |A^{-1} x| within this of 1 counts as a boundary point
QUAD_TOL = 1e-10
TABLE_SIZE = 2048


def _vectorize(f):
    def g(s):
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            return float(f(float(s)))
        return np.array([f(float(v)) for v in s.ravel()]).reshape(s.shape)

    return g


@dataclass(frozen=True)
class DensityProfile:
    """Radial data ``rho0, eps0, p0`` with boundary exponent ``delta``.

    All callables accept scalars or arrays of s in [0, 1].
    """

    rho0: Callable
    delta: float
    gamma: float
    eps0: Callable
    p0: Callable
    p0_prime: Callable
    name: str = "custom"
    closed_form: bool = field(default=False, compare=False)

    @property
    def eps0_prime_at_boundary(self) -> float:
        return -1.0 / ((self.gamma - 1.0) * (1.0 + self.delta))


def _check_gamma(gamma):
    if not (math.isfinite(gamma) and gamma > 1.0):
        raise DomainError(f"gamma must exceed 1, got {gamma}")


def isentropic_profile(gamma: float) -> DensityProfile:
    """Closed-form profile for p = rho^gamma: eps0 = (1 - s^2) / (2 gamma)."""
    _check_gamma(gamma)
    g = float(gamma)
    c = (g - 1.0) / (2.0 * g)
    k = 1.0 / (g - 1.0)

    def rho0(s):
        s = np.asarray(s, dtype=float)
        return np.maximum(c * (1.0 - s * s), 0.0) ** k

    def eps0(s):
        s = np.asarray(s, dtype=float)
        return np.maximum(1.0 - s * s, 0.0) / (2.0 * g)

    def p0(s):
        return (g - 1.0) * rho0(s) * eps0(s)

    def p0_prime(s):
        return -np.asarray(s, dtype=float) * rho0(s)

    return DensityProfile(rho0, k, g, eps0, p0, p0_prime, name=f"isentropic(gamma={g:g})", closed_form=True)


def _tail_moment(rho0, s):
    """int_s^1 r rho0(r) dr by adaptive quadrature."""
    if s >= 1.0:
        return 0.0
    val, err = quad(lambda r: r * float(rho0(r)), s, 1.0, epsabs=1e-15, epsrel=1e-12, limit=200)
    if not math.isfinite(val) or err > QUAD_TOL * max(abs(val), 1e-300) + 1e-15:
        raise QuadratureFailure(f"moment integral from s={s:.6g} did not converge (err {err:.2e})")
    return val


def eps0_from_rho0(rho0: Callable, delta: float, gamma: float) -> Callable:
    """Specific internal energy generated by ``rho0``, evaluated by quadrature.

    Within ``BOUNDARY_LAYER`` of s = 1 the quotient is 0/0 and the linear
    expansion ``eps0'(1) (s - 1)`` is returned instead.
    """
    _check_gamma(gamma)
    if not delta > 0:
        raise DomainError("boundary exponent delta must be positive")
    slope = -1.0 / ((gamma - 1.0) * (1.0 + delta))

    def eps0(s):
        if s >= 1.0 - BOUNDARY_LAYER:
            return slope * (min(s, 1.0) - 1.0)
        return _tail_moment(rho0, s) / ((gamma - 1.0) * float(rho0(s)))

    return _vectorize(eps0)


def check_density_class(rho0: Callable, delta: float, n: int = 1001) -> None:
    """Sampled checks that rho0 is admissible with boundary exponent delta.

    Raises DomainError listing the first failed condition.
    """
    s = np.linspace(0.0, 1.0, n)[:-1]
    vals = np.asarray([float(rho0(v)) for v in s])
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
        raise DomainError("rho0 must be positive on [0, 1)")
    if abs(float(rho0(1.0))) > 1e-14:
        raise DomainError("rho0 must vanish at s = 1")
    h = 1e-6
    if abs(float(rho0(h)) - float(rho0(0.0))) / h > 1e-4 * max(1.0, abs(vals[0])):
        raise DomainError("rho0 must have zero slope at s = 0")
    ratios = []
    for k in range(3, 7):
        d = 10.0 ** (-k)
        ratios.append(d ** (-delta) * float(rho0(1.0 - d)))
    ratios = np.array(ratios)
    if not np.all(np.isfinite(ratios)) or np.any(ratios <= 0.0):
        raise DomainError(f"(1-s)^(-delta) rho0 has no positive limit for delta={delta}")
    if abs(ratios[-1] / ratios[-2] - 1.0) > 1e-2:
        raise DomainError(f"(1-s)^(-delta) rho0 does not settle for delta={delta}")


def profile_from_density(rho0: Callable, delta: float, gamma: float, name: str = "custom") -> DensityProfile:
    """Tabulate a user profile on Chebyshev points with cubic interpolation.

    ``delta`` is validated against rho0, never inferred.
    """
    _check_gamma(gamma)
    check_density_class(rho0, delta)
    gamma = float(gamma)
    nodes = 0.5 * (1.0 - np.cos(np.pi * np.arange(TABLE_SIZE) / (TABLE_SIZE - 1)))
    moments = np.array([_tail_moment(rho0, s) for s in nodes])
    eps_exact = eps0_from_rho0(rho0, delta, gamma)
    eps_nodes = eps_exact(nodes)
    p_spline = CubicSpline(nodes, moments)
    e_spline = CubicSpline(nodes, eps_nodes)
    dp_spline = p_spline.derivative()
    rho_v = _vectorize(lambda s: float(rho0(s)))

    def eps0(s):
        return np.maximum(e_spline(np.clip(s, 0.0, 1.0)), 0.0)

    def p0(s):
        return np.maximum(p_spline(np.clip(s, 0.0, 1.0)), 0.0)

    def p0_prime(s):
        return dp_spline(np.clip(s, 0.0, 1.0))

    return DensityProfile(rho_v, float(delta), gamma, eps0, p0, p0_prime, name=name)


BUILTIN_DENSITIES = {
    "parabolic": (lambda s: 1.0 - s * s, 1.0),
    "quartic": (lambda s: (1.0 - s * s) ** 2, 2.0),
    "cosine": (lambda s: math.cos(0.5 * math.pi * s) if s < 1.0 else 0.0, 1.0),
}


def builtin_profile(name: str, gamma: float) -> DensityProfile:
    if name == "isentropic":
        return isentropic_profile(gamma)
    try:
        rho0, delta = BUILTIN_DENSITIES[name]
    except KeyError:
        raise DomainError(f"unknown profile {name!r}") from None
    return profile_from_density(rho0, delta, gamma, name=name)


def profile_from_config(cfg) -> DensityProfile:
    """Accepts ``{"isentropic": {"gamma": g}}`` or ``{"name": ..., "gamma": g}``."""
    if isinstance(cfg, dict) and "isentropic" in cfg:
        return isentropic_profile(float(cfg["isentropic"]["gamma"]))
    if isinstance(cfg, dict) and "name" in cfg:
        return builtin_profile(cfg["name"], float(cfg["gamma"]))
    raise DomainError(f"unrecognised profile config {cfg!r}")


# ---------------------------------------------------------------- field samples


@dataclass(frozen=True)
class FluidSample:
    x: np.ndarray
    u: np.ndarray
    rho: float
    eps: float
    p: float


def _reference_radius(A, x, tol=BOUNDARY_TOL):
    y = inv(A) @ np.asarray(x, dtype=float)
    r = float(np.linalg.norm(y))
    if r > 1.0 + tol:
        raise OutsideDomain(f"|A^-1 x| = {r:.12g} > 1")
    if abs(r - 1.0) <= tol:
        r = 1.0
    return y, r


def sample_compressible(s: PhaseState, profile: DensityProfile, x) -> FluidSample:
    if s.incompressible:
        raise DomainError("sample_compressible needs a compressible state")
    if not math.isclose(s.gamma, profile.gamma, rel_tol=1e-12):
        raise DomainError("profile and state have different gamma")
    x = np.asarray(x, dtype=float)
    y, r = _reference_radius(s.A, x)
    J = det3(s.A)
    u = s.Adot @ y
    rho = float(profile.rho0(r)) / J
    eps = float(profile.eps0(r)) / J ** (s.gamma - 1.0)
    return FluidSample(x=x, u=u, rho=rho, eps=eps, p=(s.gamma - 1.0) * rho * eps)


def boundary_normal_eps_derivative(s: PhaseState, profile: DensityProfile, x) -> float:
    """Outward normal derivative of eps at a boundary point (negative for vacuum data)."""
    A = s.A
    y, r = _reference_radius(A, x, tol=1e-10)
    if r != 1.0:
        raise NotOnBoundary("point is not on the free boundary")
    g = inv(A).T @ y
    return profile.eps0_prime_at_boundary / det3(A) ** (s.gamma - 1.0) * float(np.linalg.norm(g))


def sample_incompressible_pressure(s: PhaseState, x) -> float:
    """p = Lambda (1 - |A^{-1} x|^2) / 2."""
    _, r = _reference_radius(s.A, x)
    return 0.5 * incomp_lambda(s.A, s.Adot) * (1.0 - r * r)


def boundary_normal_pressure_derivative(s: PhaseState, x) -> float:
    """Outward normal derivative of the incompressible pressure on the boundary.

    Equals -Lambda |A^{-T} A^{-1} x|; negative exactly when Lambda > 0.
    """
    A = s.A
    ainv = inv(A)
    y = ainv @ np.asarray(x, dtype=float)
    if abs(np.linalg.norm(y) - 1.0) > 1e-10:
        raise NotOnBoundary("point is not on the free boundary")
    return -incomp_lambda(A, s.Adot) * float(np.linalg.norm(ainv.T @ y))


def pde_residual(s: PhaseState, Addot, profile: DensityProfile, x) -> np.ndarray:
    """Momentum residual rho D_t u + grad p at an interior or boundary point.

    D_t u = A'' A^{-1} x, and grad p is built from the profile's p0' through
    p = J^{-gamma} p0(|A^{-1} x|).  When p0' = -s rho0 this reduces to
    rho (A'' - J^{1-gamma} A^{-T}) A^{-1} x.
    """
    sample = sample_compressible(s, profile, x)
    Addot = as_mat3(Addot, "Addot")
    ainv = inv(s.A)
    J = det3(s.A)
    y = ainv @ sample.x
    r = float(np.linalg.norm(y))
    if r == 0.0:
        dp_over_r = -float(profile.rho0(0.0))
    else:
        dp_over_r = float(profile.p0_prime(min(r, 1.0))) / r
    grad_p = J ** (-s.gamma) * dp_over_r * (ainv.T @ y)
    return sample.rho * (Addot @ y) + grad_p
