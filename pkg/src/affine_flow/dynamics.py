"""Equations of motion for affine fluid ellipsoids.

Compressible motion obeys ``A'' = N(A) = (det A)^{-gamma} cof A``; this is a
Hamiltonian system with potential ``(gamma-1)^{-1} (det A)^{1-gamma}`` and is
stepped with Störmer-Verlet.  Incompressible motion is geodesic flow on
SL(3), ``A'' = Lambda(A, A') A^{-T}``, stepped with RK4 followed by a
projection back onto ``det A = 1, tr(A' A^{-1}) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, StepFailure, ZeroKineticEnergy
from .mat3 import as_mat3, cof3, cof_many, det3, det_many, inv

CONSTRAINT_TOL = 1e-8
DET_COLLAPSE = 1e-10


@dataclass(frozen=True)
class Compressible:
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 1.0):
            raise DomainError(f"adiabatic index must exceed 1, got {self.gamma}")


@dataclass(frozen=True)
class Incompressible:
    pass


@dataclass(frozen=True)
class PhaseState:
    """A deformation gradient and its time derivative.

    Construction validates the regime invariants unless ``check=False``
    (used internally when replaying integrator output).
    """

    A: np.ndarray
    Adot: np.ndarray
    regime: Compressible | Incompressible
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "A", as_mat3(self.A, "A"))
        object.__setattr__(self, "Adot", as_mat3(self.Adot, "Adot"))
        if not self.check:
            return
        d = det3(self.A)
        if isinstance(self.regime, Compressible):
            if not d > 0.0:
                raise DomainError(f"compressible state needs det A > 0, got {d:.6g}")
        else:
            if abs(d - 1.0) > CONSTRAINT_TOL:
                raise DomainError(f"incompressible state needs det A = 1, got {d:.12g}")
            tr = np.trace(self.Adot @ inv(self.A))
            if abs(tr) > CONSTRAINT_TOL:
                raise DomainError(f"incompressible state needs tr(A' A^-1) = 0, got {tr:.3g}")

    @property
    def incompressible(self) -> bool:
        return isinstance(self.regime, Incompressible)

    @property
    def gamma(self) -> float | None:
        return None if self.incompressible else self.regime.gamma

    @classmethod
    def compressible(cls, A, Adot, gamma):
        return cls(A, Adot, Compressible(float(gamma)))

    @classmethod
    def incompressible_state(cls, A, Adot):
        return cls(A, Adot, Incompressible())


@dataclass(frozen=True)
class IntegratorConfig:
    step: float
    t_end: float
    t_start: float = 0.0
    scheme: str | None = None  # "verlet" | "rk4"; default by regime
    projection: bool = True
    sample_stride: int = 1

    def __post_init__(self):
        if not self.step > 0.0:
            raise DomainError("step must be positive")
        if self.step > abs(self.t_end - self.t_start):
            raise DomainError("step exceeds the integration interval")
        if int(self.sample_stride) < 1:
            raise DomainError("sample_stride must be >= 1")
        if self.scheme not in (None, "verlet", "rk4"):
            raise DomainError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution, stored in order of increasing time.

    ``diagnostics`` maps names (``det``, ``trL``, ``E_K``, and ``E``/``E_P``
    or ``Lambda``/``curvature``, ``lam1..lam3`` ...) to per-sample arrays.
    """

    times: np.ndarray
    A: np.ndarray
    Adot: np.ndarray
    regime: Compressible | Incompressible
    diagnostics: dict = field(default_factory=dict)
    t_start: float = 0.0
    t_end: float = 0.0

    def __post_init__(self):
        if len(self.times) != len(self.A) or len(self.A) != len(self.Adot):
            raise ValueError("times and states differ in length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def gamma(self):
        return None if isinstance(self.regime, Incompressible) else self.regime.gamma

    def state(self, i: int) -> PhaseState:
        return PhaseState(self.A[i], self.Adot[i], self.regime, check=False)

    @property
    def states(self) -> list[PhaseState]:
        return [self.state(i) for i in range(len(self))]

    def _index_of(self, t):
        return 0 if math.isclose(self.times[0], t, abs_tol=1e-12) else len(self) - 1

    def final_state(self) -> PhaseState:
        return self.state(self._index_of(self.t_end))

    def window(self, t_lo: float, t_hi: float) -> np.ndarray:
        """Boolean mask of samples with t_lo <= t <= t_hi."""
        return (self.times >= t_lo) & (self.times <= t_hi)


# ---------------------------------------------------------------- right-hand sides


def comp_rhs(A, gamma: float) -> np.ndarray:
    """N(A) = (det A)^{-gamma} cof A = (det A)^{1-gamma} A^{-T}."""
    A = as_mat3(A, "A")
    if not gamma > 1.0:
        raise DomainError("gamma must exceed 1")
    d = det3(A)
    if not d > 0.0:
        raise DomainError(f"det A must be positive, got {d:.6g}")
    return cof3(A) * d ** (-gamma)


def comp_energy(s: PhaseState) -> tuple[float, float, float]:
    """Total, kinetic and potential energy ``(E, E_K, E_P)``."""
    if s.incompressible:
        raise DomainError("comp_energy needs a compressible state")
    d = det3(s.A)
    if not d > 0.0:
        raise DomainError("det A must be positive")
    ek = 0.5 * float(np.sum(s.Adot * s.Adot))
    ep = d ** (1.0 - s.gamma) / (s.gamma - 1.0)
    return ek + ep, ek, ep


def incomp_lambda(A, Adot) -> float:
    """Lambda = tr((A' A^{-1})^2) / tr(A^{-T} A^{-1})."""
    ainv = inv(A)
    el = as_mat3(Adot) @ ainv
    return float(np.trace(el @ el) / np.sum(ainv * ainv))


def incomp_rhs(A, Adot) -> np.ndarray:
    A = as_mat3(A)
    return incomp_lambda(A, Adot) * inv(A).T


def curvature(A, Adot) -> float:
    """Curvature of t -> A(t) in R^9 for a geodesic of SL(3)."""
    ainv = inv(A)
    Adot = as_mat3(Adot)
    ek = 0.5 * float(np.sum(Adot * Adot))
    if ek == 0.0:
        raise ZeroKineticEnergy("curvature undefined at zero kinetic energy")
    el = Adot @ ainv
    return float(np.trace(el @ el) / (2.0 * ek * math.sqrt(np.sum(ainv * ainv))))


def velocity_gradient(s: PhaseState):
    """Return ``(L, D, W, omega)`` with L = A' A^{-1} = D + W and W v = omega x v / 2."""
    L = s.Adot @ inv(s.A)
    D = 0.5 * (L + L.T)
    W = 0.5 * (L - L.T)
    omega = 2.0 * np.array([W[2, 1], W[0, 2], W[1, 0]])
    return L, D, W, omega


# ---------------------------------------------------------------- integration


def trajectory_diagnostics(A: np.ndarray, V: np.ndarray, regime) -> dict:
    """Per-sample diagnostics for stacks of states."""
    d = det_many(A)
    c = cof_many(A)
    ainv = np.transpose(c, (0, 2, 1)) / d[:, None, None]
    L = V @ ainv
    ek = 0.5 * np.sum(V * V, axis=(1, 2))
    out = {"det": d, "trL": np.trace(L, axis1=1, axis2=2), "E_K": ek}
    if isinstance(regime, Compressible):
        g = regime.gamma
        ep = d ** (1.0 - g) / (g - 1.0)
        out["E_P"] = ep
        out["E"] = ek + ep
    else:
        trl2 = np.einsum("nij,nji->n", L, L)
        den = np.sum(ainv * ainv, axis=(1, 2))
        out["Lambda"] = trl2 / den
        with np.errstate(divide="ignore", invalid="ignore"):
            out["curvature"] = np.where(ek > 0, trl2 / (2.0 * ek * np.sqrt(den)), 0.0)
    sv = np.linalg.svd(A, compute_uv=False)
    for k in range(3):
        out[f"lam{k + 1}"] = sv[:, k]
    return out


def _energy_det_floor(s: PhaseState) -> float:
    # E_P <= E(0) bounds det A from below; half of that bound flags a numerical fault.
    e0 = comp_energy(s)[0]
    g = s.gamma
    return 0.5 * ((g - 1.0) * e0) ** (1.0 / (1.0 - g))


def integrate(s0: PhaseState, cfg: IntegratorConfig) -> Trajectory:
    """Fixed-step integration from ``cfg.t_start`` to ``cfg.t_end`` (either direction)."""
    span = cfg.t_end - cfg.t_start
    n_steps = max(1, int(math.ceil(abs(span) / cfg.step - 1e-9)))
    h = span / n_steps
    stride = int(cfg.sample_stride)
    regime = s0.regime
    scheme = cfg.scheme or ("rk4" if s0.incompressible else "verlet")
    a0 = np.ascontiguousarray(s0.A, dtype=float)
    v0 = np.ascontiguousarray(s0.Adot, dtype=float)

    extra = {}
    if s0.incompressible:
        if scheme != "rk4":
            raise DomainError("incompressible flow is integrated with rk4 only")
        a, v, steps, pd, pt, fail = _kernels.rk4_run(
            a0, v0, _kernels.INCOMPRESSIBLE, 0.0, h, n_steps, stride, bool(cfg.projection), DET_COLLAPSE
        )
        extra = {"projection_det": pd, "projection_trL": pt}
    else:
        floor = max(DET_COLLAPSE, _energy_det_floor(s0))
        if scheme == "verlet":
            a, v, steps, fail = _kernels.verlet_run(a0, v0, regime.gamma, h, n_steps, stride, floor)
        else:
            a, v, steps, _, _, fail = _kernels.rk4_run(
                a0, v0, _kernels.COMPRESSIBLE, regime.gamma, h, n_steps, stride, False, floor
            )
    if fail >= 0:
        t_fail = cfg.t_start + (fail - 1) * h
        raise StepFailure(f"det A collapsed after t = {t_fail:.6g}", time=t_fail)

    times = cfg.t_start + steps * h
    times[-1] = cfg.t_end
    diags = trajectory_diagnostics(a, v, regime)
    diags.update(extra)
    if h < 0:
        order = slice(None, None, -1)
        times, a, v = times[order], a[order], v[order]
        diags = {k: val[order] for k, val in diags.items()}
    return Trajectory(
        times=times,
        A=a,
        Adot=v,
        regime=regime,
        diagnostics=diags,
        t_start=float(cfg.t_start),
        t_end=float(cfg.t_end),
    )
