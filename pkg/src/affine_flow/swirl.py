"""Axisymmetric swirling incompressible ellipsoids and shear flows.

The ansatz A = diag(alpha R(beta), alpha^{-2}), with R(beta) = exp(beta W0),
turns the SL(3) geodesic equation into

    alpha'' = (6 alpha^{-7} alpha'^2 + c^2 alpha^{-3}) / (1 + 2 alpha^{-6}),
    beta'   = c / alpha^2,

where the swirl c = alpha^2 beta' is conserved.  Near alpha = 0 the variable
q = alpha^{-2} is used instead, with q'' = (1.5 q'^2 / q - 2 c^2 q^3) / (1 + 2 q^3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .dynamics import Incompressible, PhaseState, Trajectory, trajectory_diagnostics
from .errors import (
    DomainError,
    InsufficientSpan,
    NotNilpotent,
    NotUnimodular,
    StepFailure,
    WindowNotBracketed,
    ZeroEnergy,
)
from .mat3 import as_mat3, det3
from .scattering import AsymptoticState

W0 = np.array([[0.0, 1.0], [-1.0, 0.0]])
I0 = np.eye(2)

ALPHA_ENTER_Q = 0.2  # switch to q = alpha^{-2} below this
ALPHA_LEAVE_Q = 0.25  # and back above this


@dataclass(frozen=True)
class SwirlState:
    alpha: float
    alpha_dot: float
    beta: float = 0.0
    beta_dot0: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "alpha_dot", "beta", "beta_dot0"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if not self.alpha > 0.0:
            raise DomainError("alpha must be positive")

    @property
    def beta_dot(self) -> float:
        return self.beta_dot0 / self.alpha**2


def _alpha_ddot(alpha, alpha_dot, beta_dot0):
    # numerator and denominator scaled by alpha^7
    return (6.0 * alpha_dot**2 + beta_dot0**2 * alpha**4) / (alpha**7 + 2.0 * alpha)


def swirl_rhs(s: SwirlState) -> float:
    """alpha'' of the reduced system."""
    return _alpha_ddot(s.alpha, s.alpha_dot, s.beta_dot0)


def swirl_energy(s: SwirlState) -> float:
    """e0 = (1 + 2 alpha^{-6}) alpha'^2 + c^2 alpha^{-2} (twice the kinetic energy)."""
    return (1.0 + 2.0 * s.alpha**-6) * s.alpha_dot**2 + s.beta_dot0**2 * s.alpha**-2


def swirl_curvature(s: SwirlState) -> float:
    e0 = swirl_energy(s)
    if e0 == 0.0:
        raise ZeroEnergy("curvature undefined for the static ellipsoid")
    a = s.alpha
    return (3.0 * (s.alpha_dot / a) ** 2 - s.beta_dot**2) / (e0 * math.sqrt(2.0 * a**-2 + a**4))


def swirl_lambda(s: SwirlState) -> float:
    a = s.alpha
    return (6.0 * (s.alpha_dot / a) ** 2 - 2.0 * s.beta_dot**2) / (2.0 * a**-2 + a**4)


def _rot(beta):
    c, s = np.cos(beta), np.sin(beta)
    return np.array([[c, s], [-s, c]])


def embed(s: SwirlState) -> PhaseState:
    """The incompressible state diag(alpha R(beta), alpha^{-2}) and its velocity."""
    a, ad, bd = s.alpha, s.alpha_dot, s.beta_dot
    R = _rot(s.beta)
    A = np.zeros((3, 3))
    V = np.zeros((3, 3))
    A[:2, :2] = a * R
    A[2, 2] = a**-2
    V[:2, :2] = (ad * I0 + a * bd * W0) @ R
    V[2, 2] = -2.0 * a**-3 * ad
    return PhaseState.incompressible_state(A, V)


# ---------------------------------------------------------------- integration


@dataclass(frozen=True)
class SwirlConfig:
    t_end: float
    t_start: float = 0.0
    sample_step: float = 0.01
    rtol: float = 1e-12
    atol: float = 1e-13
    method: str = "DOP853"

    def __post_init__(self):
        if not self.sample_step > 0.0:
            raise DomainError("sample_step must be positive")
        if not self.t_start <= 0.0 <= self.t_end or self.t_start == self.t_end:
            raise DomainError("need t_start <= 0 <= t_end with a non-empty span")


@dataclass(frozen=True)
class _Segment:
    t0: float
    t1: float
    q_mode: bool
    sol: object

    def contains(self, t):
        lo, hi = min(self.t0, self.t1), max(self.t0, self.t1)
        return lo <= t <= hi


def _alpha_mode(c):
    def f(t, y):
        a, ad, _ = y
        return [ad, _alpha_ddot(a, ad, c), c / (a * a)]

    def ev(t, y):
        return y[0] - ALPHA_ENTER_Q

    ev.terminal, ev.direction = True, -1.0
    return f, ev


def _q_mode(c):
    def f(t, y):
        q, qd, _ = y
        return [qd, (1.5 * qd * qd / q - 2.0 * c * c * q**3) / (1.0 + 2.0 * q**3), c * q]

    def ev(t, y):
        return y[0] - ALPHA_LEAVE_Q**-2

    ev.terminal, ev.direction = True, -1.0
    return f, ev


def _to_q(a, ad):
    return a**-2, -2.0 * a**-3 * ad


def _from_q(q, qd):
    return q**-0.5, -0.5 * q**-1.5 * qd


def _integrate_leg(s0: SwirlState, t_target: float, cfg: SwirlConfig):
    segments = []
    t = 0.0
    q_mode = s0.alpha < ALPHA_ENTER_Q
    a, ad, b = s0.alpha, s0.alpha_dot, s0.beta
    c = s0.beta_dot0
    guard = 0
    while t != t_target:
        guard += 1
        if guard > 1000:
            raise StepFailure("swirl integration keeps switching variables", time=t)
        f, ev = (_q_mode if q_mode else _alpha_mode)(c)
        y0 = [*_to_q(a, ad), b] if q_mode else [a, ad, b]
        sol = solve_ivp(f, (t, t_target), y0, method=cfg.method, rtol=cfg.rtol, atol=cfg.atol, dense_output=True, events=ev)
        if sol.status < 0 or not np.all(np.isfinite(sol.y[:, -1])):
            raise StepFailure(f"swirl integration failed: {sol.message}", time=float(sol.t[-1]))
        t_new = float(sol.t[-1])
        segments.append(_Segment(t, t_new, q_mode, sol.sol))
        y = sol.y[:, -1]
        a, ad = _from_q(y[0], y[1]) if q_mode else (y[0], y[1])
        b = y[2]
        if sol.status == 1:
            q_mode = not q_mode
        elif t_new != t_target:
            raise StepFailure("swirl integration stopped early", time=t_new)
        t = t_new
    return segments


@dataclass(frozen=True)
class SwirlTrajectory:
    times: np.ndarray
    alpha: np.ndarray
    alpha_dot: np.ndarray
    beta: np.ndarray
    beta_dot0: float
    e0: float
    segments: tuple = field(default=(), repr=False)

    def __len__(self):
        return len(self.times)

    @property
    def beta_dot(self) -> np.ndarray:
        return self.beta_dot0 / self.alpha**2

    @property
    def q_dot(self) -> np.ndarray:
        """(alpha^{-2})'."""
        return -2.0 * self.alpha**-3 * self.alpha_dot

    def state(self, i: int) -> SwirlState:
        return SwirlState(self.alpha[i], self.alpha_dot[i], self.beta[i], self.beta_dot0)

    def evaluate(self, t: float) -> SwirlState:
        """Dense-output state at any t within the span."""
        for seg in self.segments:
            if seg.contains(t):
                y = seg.sol(t)
                a, ad = _from_q(y[0], y[1]) if seg.q_mode else (y[0], y[1])
                return SwirlState(a, ad, y[2], self.beta_dot0)
        raise DomainError(f"t = {t} outside the integrated span")

    def energy(self) -> np.ndarray:
        a, ad = self.alpha, self.alpha_dot
        return (1.0 + 2.0 * a**-6) * ad**2 + self.beta_dot0**2 * a**-2

    def curvature(self) -> np.ndarray:
        if self.e0 == 0.0:
            raise ZeroEnergy("curvature undefined for the static ellipsoid")
        a = self.alpha
        return (3.0 * (self.alpha_dot / a) ** 2 - self.beta_dot**2) / (self.e0 * np.sqrt(2.0 * a**-2 + a**4))

    def lam(self) -> np.ndarray:
        a = self.alpha
        return (6.0 * (self.alpha_dot / a) ** 2 - 2.0 * self.beta_dot**2) / (2.0 * a**-2 + a**4)

    def embedded(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacks of the embedded A(t) and A'(t)."""
        n = len(self)
        c, s = np.cos(self.beta), np.sin(self.beta)
        R = np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)
        A = np.zeros((n, 3, 3))
        V = np.zeros((n, 3, 3))
        A[:, :2, :2] = self.alpha[:, None, None] * R
        A[:, 2, 2] = self.alpha**-2
        gen = self.alpha_dot[:, None, None] * I0 + (self.alpha * self.beta_dot)[:, None, None] * W0
        V[:, :2, :2] = gen @ R
        V[:, 2, 2] = self.q_dot
        return A, V

    def to_trajectory(self) -> Trajectory:
        A, V = self.embedded()
        regime = Incompressible()
        return Trajectory(
            times=self.times.copy(),
            A=A,
            Adot=V,
            regime=regime,
            diagnostics=trajectory_diagnostics(A, V, regime),
            t_start=float(self.times[0]),
            t_end=float(self.times[-1]),
        )


def integrate_swirl(s0: SwirlState, cfg: SwirlConfig) -> SwirlTrajectory:
    """Integrate from t = 0 forward to ``cfg.t_end`` and backward to ``cfg.t_start``."""
    segments = []
    parts = []
    if cfg.t_start < 0.0:
        back = _integrate_leg(s0, cfg.t_start, cfg)
        segments.extend(back)
        n = int(math.floor(-cfg.t_start / cfg.sample_step + 1e-9))
        tb = -cfg.sample_step * np.arange(n, 0, -1)
        if tb.size == 0 or tb[0] > cfg.t_start:
            tb = np.concatenate([[cfg.t_start], tb])
        parts.append(tb)
    n = int(math.floor(cfg.t_end / cfg.sample_step + 1e-9))
    tf = cfg.sample_step * np.arange(0, n + 1)
    if tf[-1] < cfg.t_end:
        tf = np.concatenate([tf, [cfg.t_end]])
    if cfg.t_end > 0.0:
        segments.extend(_integrate_leg(s0, cfg.t_end, cfg))
    parts.append(tf)
    times = np.concatenate(parts)

    vals = np.empty((len(times), 3))
    for seg in segments:
        lo, hi = min(seg.t0, seg.t1), max(seg.t0, seg.t1)
        m = (times >= lo) & (times <= hi)
        if not np.any(m):
            continue
        y = seg.sol(times[m])
        if seg.q_mode:
            a, ad = _from_q(y[0], y[1])
            vals[m] = np.column_stack([a, ad, y[2]])
        else:
            vals[m] = y.T
    vals[times == 0.0] = [s0.alpha, s0.alpha_dot, s0.beta]
    return SwirlTrajectory(
        times=times,
        alpha=vals[:, 0],
        alpha_dot=vals[:, 1],
        beta=vals[:, 2],
        beta_dot0=s0.beta_dot0,
        e0=swirl_energy(s0),
        segments=tuple(segments),
    )


# ---------------------------------------------------------------- curvature window


def negative_curvature_window(traj: SwirlTrajectory) -> tuple[float, float] | None:
    """Interval where the geodesic curvature is negative.

    Curvature has the sign of 3 (alpha alpha')^2 - c^2, which is positive at
    both ends of a swirling trajectory.  Returns None for c = 0.
    """
    c = traj.beta_dot0
    if c == 0.0:
        return None
    if traj.e0 == 0.0:
        raise ZeroEnergy("static ellipsoid")

    def g(t):
        s = traj.evaluate(t)
        return 3.0 * (s.alpha * s.alpha_dot) ** 2 - c * c

    vals = 3.0 * (traj.alpha * traj.alpha_dot) ** 2 - c * c
    if vals[0] <= 0.0 or vals[-1] <= 0.0:
        raise WindowNotBracketed("trajectory span does not bracket the negative-curvature window")
    idx = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
    if len(idx) != 2:
        raise WindowNotBracketed(f"expected two curvature sign changes, found {len(idx)}")
    roots = [brentq(g, traj.times[i], traj.times[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps) for i in idx]
    return float(roots[0]), float(roots[1])


# ---------------------------------------------------------------- asymptotes


@dataclass(frozen=True)
class SwirlAsymptote:
    branch: str  # "expanding" or "collapsing"
    slope: float
    offset: float
    beta_bar: float
    state: AsymptoticState
    t_end: float

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "slope": self.slope,
            "offset": self.offset,
            "beta_bar": self.beta_bar,
            "t_end": self.t_end,
            **self.state.to_dict(),
        }


def _tail_alpha(a, e0, c):
    # int_t^inf (sqrt(e0) - alpha') ds for large alpha, to leading order
    return c * c / (2.0 * e0 * a) if c != 0.0 else 1.0 / (5.0 * a**5)


def swirl_asymptote(traj: SwirlTrajectory, min_speed_fraction: float = 0.99) -> SwirlAsymptote:
    """Forward asymptote A_inf(t) = A0 + t A1 of the embedded trajectory.

    Expanding branch (alpha' > 0 at the end): alpha ~ sqrt(e0) t + offset and
    beta -> beta_bar.  Irrotational collapse (c = 0, alpha -> 0):
    alpha^{-2} ~ sqrt(2 e0) t + offset.
    """
    e0, c = traj.e0, traj.beta_dot0
    if e0 == 0.0:
        raise ZeroEnergy("static ellipsoid has no asymptote")
    t_e = float(traj.times[-1])
    a, ad, b = float(traj.alpha[-1]), float(traj.alpha_dot[-1]), float(traj.beta[-1])
    if ad > 0.0:
        slope = math.sqrt(e0)
        if ad < min_speed_fraction * slope:
            raise InsufficientSpan(f"alpha' = {ad:.6g} has not reached {min_speed_fraction} sqrt(e0) by t = {t_e}")
        offset = a - slope * t_e - _tail_alpha(a, e0, c)
        # beta' = c / alpha^2 ~ c / (e0 t^2)
        beta_bar = b + (c / (slope * a) if c != 0.0 else 0.0)
        R = _rot(beta_bar)
        A0 = np.zeros((3, 3))
        A1 = np.zeros((3, 3))
        A0[:2, :2] = (offset * I0 - (c / slope) * W0) @ R
        A1[:2, :2] = slope * R
        return SwirlAsymptote("expanding", slope, offset, beta_bar, AsymptoticState(A0, A1), t_e)
    if c != 0.0:
        raise InsufficientSpan("swirling trajectory has not turned around by the end of the span")
    q = a**-2
    qd = -2.0 * a**-3 * ad
    slope = math.sqrt(2.0 * e0)
    if qd < min_speed_fraction * slope:
        raise InsufficientSpan(f"(alpha^-2)' = {qd:.6g} has not reached {min_speed_fraction} sqrt(2 e0)")
    offset = q - slope * t_e - 1.0 / (8.0 * q * q)
    A0 = np.zeros((3, 3))
    A1 = np.zeros((3, 3))
    A0[2, 2] = offset
    A1[2, 2] = slope
    return SwirlAsymptote("collapsing", slope, offset, b, AsymptoticState(A0, A1), t_e)


# ---------------------------------------------------------------- shear flows


def shear_solution(M, A0, times) -> Trajectory:
    """Exact geodesic A(t) = (I + t M) A0 for nilpotent M and det A0 = 1."""
    M = as_mat3(M, "M")
    A0 = as_mat3(A0, "A0")
    scale = max(1.0, float(np.linalg.norm(M)))
    if np.max(np.abs(M @ M @ M)) > 1e-12 * scale**3:
        raise NotNilpotent("M^3 must vanish")
    if abs(det3(A0) - 1.0) > 1e-12:
        raise NotUnimodular("det A0 must equal 1")
    t = np.asarray(times, dtype=float)
    A = (np.eye(3)[None] + t[:, None, None] * M[None]) @ A0
    V = np.broadcast_to(M @ A0, A.shape).copy()
    regime = Incompressible()
    return Trajectory(
        times=t,
        A=A,
        Adot=V,
        regime=regime,
        diagnostics=trajectory_diagnostics(A, V, regime),
        t_start=float(t[0]),
        t_end=float(t[-1]),
    )


# ---------------------------------------------------------------- phase portrait


def phase_portrait(e0: float, beta_dot0: float, alpha_max: float = 5.0, n: int = 400) -> dict:
    """Energy level curve in the (alpha, alpha') plane and the curvature-sign boundary.

    Returns arrays keyed ``level`` (columns component, alpha, alpha_dot) and,
    for c != 0, ``kappa_zero`` (columns alpha, +alpha_dot, -alpha_dot) where
    3 (alpha alpha')^2 = c^2.  With c = 0 the level set splits into the
    components alpha' < 0 (0) and alpha' > 0 (1); otherwise it is one curve
    through the turning point.
    """
    if not e0 > 0.0:
        raise ZeroEnergy("level curve needs e0 > 0")
    c = abs(beta_dot0)
    a_min = c / math.sqrt(e0) if c > 0.0 else 0.0
    lo = max(a_min, 1e-3)
    if lo >= alpha_max:
        raise DomainError("alpha_max lies below the turning point")
    a = lo + (alpha_max - lo) * (0.5 - 0.5 * np.cos(np.linspace(0.0, np.pi, n)))
    speed = np.sqrt(np.maximum(e0 - c * c / a**2, 0.0) / (1.0 + 2.0 * a**-6))
    comp = np.concatenate([np.zeros(n), np.zeros(n) if c > 0.0 else np.ones(n)])
    level = np.column_stack([comp, np.concatenate([a[::-1], a]), np.concatenate([-speed[::-1], speed])])
    out = {"level": level}
    if c > 0.0:
        ak = np.linspace(lo, alpha_max, n)
        out["kappa_zero"] = np.column_stack([ak, c / (math.sqrt(3.0) * ak), -c / (math.sqrt(3.0) * ak)])
    return out
