"""Asymptotic states A_inf(t) = A0 + t A1 and the Cauchy problem at infinity.

Given a state, the unique compressible solution approaching it is built as
A = A_inf + B with B the fixed point of

    S(B)(t) = int_t^inf (sigma - t) N(A_inf(sigma) + B(sigma)) dsigma

on [T, inf), then integrated back to t = 0.  The reverse map reads (A0, A1)
off a computed trajectory.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .diagnostics import loglog_fit
from .dynamics import IntegratorConfig, PhaseState, Trajectory, integrate
from .errors import (
    DetA1NotPositive,
    DetNotDiverging,
    DomainError,
    InsufficientDecay,
    NoContraction,
    PreconditionMu,
)
from .mat3 import as_mat3, cof3, cof_many, det3, det_many

log = logging.getLogger(__name__)

DEGREE_RTOL = 1e-12


@dataclass(frozen=True)
class AsymptoticState:
    A0: np.ndarray
    A1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A0", as_mat3(self.A0, "A0"))
        object.__setattr__(self, "A1", as_mat3(self.A1, "A1"))

    def at(self, t):
        """A_inf(t); ``t`` may be a scalar or a 1-d array."""
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return self.A0 + float(t) * self.A1
        return self.A0[None] + t[:, None, None] * self.A1[None]

    def to_dict(self) -> dict:
        return {"A0": self.A0.ravel().tolist(), "A1": self.A1.ravel().tolist()}

    @classmethod
    def from_dict(cls, d) -> "AsymptoticState":
        return cls(np.reshape(d["A0"], (3, 3)), np.reshape(d["A1"], (3, 3)))

    def distance(self, other: "AsymptoticState") -> float:
        """Euclidean distance between the two (A0, A1) pairs in R^18."""
        return float(np.sqrt(np.sum((self.A0 - other.A0) ** 2) + np.sum((self.A1 - other.A1) ** 2)))


@dataclass(frozen=True)
class DegreeData:
    d: int
    b: int
    a: int
    mu: float
    gamma: float

    @property
    def weighted(self) -> bool:
        """The a = d = 1 case, solved in the t-weighted sup norm (needs gamma > 5)."""
        return self.a == 1 and self.d == 1

    @property
    def solvable(self) -> bool:
        if self.weighted:
            return self.gamma > 5.0
        return self.a != 1 and self.mu > 0.0

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "b": self.b,
            "a": self.a,
            "mu": self.mu,
            "gamma": self.gamma,
            "weighted": self.weighted,
            "solvable": self.solvable,
        }


def _scale(st):
    return max(np.sqrt(np.sum(st.A0**2)), np.sqrt(np.sum(st.A1**2)), 1e-300)


def det_polynomial(st: AsymptoticState) -> np.ndarray:
    """Coefficients (beta0, beta1, beta2, beta3) of det(A0 + t A1)."""
    A0, A1 = st.A0, st.A1
    return np.array(
        [
            det3(A0),
            float(np.sum(cof3(A0) * A1)),
            float(np.sum(A0 * cof3(A1))),
            det3(A1),
        ]
    )


def cof_polynomial(st: AsymptoticState) -> np.ndarray:
    """C0, C1, C2 with cof(A0 + t A1) = C0 + C1 t + C2 t^2, by interpolation at t = -1, 0, 1."""
    cm = cof3(st.at(-1.0))
    c0 = cof3(st.at(0.0))
    cp = cof3(st.at(1.0))
    return np.stack([c0, 0.5 * (cp - cm), 0.5 * (cp + cm) - c0])


def _degree(coeffs, tol):
    nz = [j for j, c in enumerate(coeffs) if np.max(np.abs(c)) > tol]
    return max(nz) if nz else -1


def degree_exponents(st: AsymptoticState, gamma: float) -> DegreeData:
    """Degrees d of det A_inf, b of cof A_inf, a = b - d and mu = d (gamma-1) - a - 2."""
    scale = _scale(st)
    beta = det_polynomial(st)
    d = _degree(beta, DEGREE_RTOL * scale**3)
    if d < 1 or beta[d] <= 0.0:
        raise DetNotDiverging("det(A0 + t A1) does not tend to +infinity")
    b = _degree(cof_polynomial(st), DEGREE_RTOL * scale**2)
    a = b - d
    mu = d * (gamma - 1.0) - a - 2.0
    return DegreeData(d=int(d), b=int(b), a=int(a), mu=float(mu), gamma=float(gamma))


# ---------------------------------------------------------------- quadrature helpers


def force_many(A: np.ndarray, gamma: float) -> np.ndarray:
    """N(A) = (det A)^{-gamma} cof A over a stack."""
    d = det_many(A)
    return cof_many(A) * d[:, None, None] ** (-gamma)


_GL8 = leggauss(8)
_GL16 = leggauss(16)


def _panel_nodes(edges, rule):
    x, w = rule
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo) + half * x[None]).ravel()
    weights = (half * w[None]).ravel()
    return nodes, weights


def tail_moments(f, t_from, mu, rule=_GL16, max_panels=4000):
    """(int_{t_from}^inf f, int_{t_from}^inf sigma f) for f(sigma) ~ sigma^{-mu-2}.

    ``f`` maps a 1-d array of times to a stack of matrices.  Geometric panels
    of ratio 2 carry the integrand until a panel's share drops below double
    precision; beyond the last panel f is continued by the power law.
    """
    mu = max(mu, 1e-3)
    k = int(min(max_panels, math.ceil(60.0 / (mu * math.log(2.0)))))
    edges = t_from * 2.0 ** np.arange(k + 1)
    s, w = _panel_nodes(edges, rule)
    F = f(s)
    f0 = np.einsum("n,nij->ij", w, F)
    f1 = np.einsum("n,nij->ij", w * s, F)
    t_last = edges[-1]
    f_last = f(np.array([t_last]))[0]
    f0 += f_last * t_last / (mu + 1.0)
    f1 += f_last * t_last**2 / mu
    return f0, f1


def _far_tail(state_fn, gamma, t_from, mu):
    return tail_moments(lambda s: force_many(state_fn(s), gamma), t_from, mu)


# ---------------------------------------------------------------- fixed point


@dataclass(frozen=True)
class FixedPointConfig:
    T0: float = 10.0
    max_doublings: int = 3
    n_nodes: int = 512
    span: float = 100.0
    tol: float = 1e-14
    max_iter: int = 200
    ratio_limit: float = 0.5
    ball_limit: float = 0.5
    backward_step: float | None = None


@dataclass(frozen=True)
class FixedPointGrid:
    T: float
    T_max: float
    nodes: np.ndarray
    B_values: np.ndarray
    dB_values: np.ndarray
    weighted: bool
    ball_radius: float


@dataclass(frozen=True)
class CauchySolution:
    initial: PhaseState
    contraction_factor: float
    grid: FixedPointGrid
    degree: DegreeData
    iterations: int
    attempted_T: tuple
    tail_bound: float
    updates: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "A0_data": self.initial.A.ravel().tolist(),
            "A1_data": self.initial.Adot.ravel().tolist(),
            "contraction_factor": self.contraction_factor,
            "T": self.grid.T,
            "T_max": self.grid.T_max,
            "attempted_T": list(self.attempted_T),
            "iterations": self.iterations,
            "weighted": self.grid.weighted,
            "ball_radius": self.grid.ball_radius,
            "tail_bound": self.tail_bound,
            "degree": self.degree.to_dict(),
        }


def _check_branch(dd: DegreeData):
    if dd.weighted:
        if not dd.gamma > 5.0:
            raise PreconditionMu(f"a = d = 1 needs gamma > 5, got gamma = {dd.gamma:g}")
    elif dd.a == 1 or not dd.mu > 0.0:
        raise PreconditionMu(f"mu = {dd.mu:g} must be positive (d={dd.d}, a={dd.a}, gamma={dd.gamma:g})")


def _largest_real_root(beta):
    roots = np.roots(beta[::-1][np.argmax(np.abs(beta[::-1]) > 0) :]) if np.any(beta) else []
    real = [r.real for r in np.atleast_1d(roots) if abs(r.imag) <= 1e-9 * max(1.0, abs(r))]
    return max(real) if real else -np.inf


def _opnorm_many(M):
    return np.linalg.norm(M, ord=2, axis=(1, 2))


def _iterate(st, gamma, T, cfg, weighted, mu):
    nodes = T * cfg.span ** (np.arange(cfg.n_nodes) / (cfg.n_nodes - 1))
    T_max = nodes[-1]
    q_nodes, q_w = _panel_nodes(nodes, _GL8)
    n_per = len(_GL8[0])
    A_inf_q = st.at(q_nodes)
    f0_tail, f1_tail = _far_tail(st.at, gamma, T_max, mu)
    weight = nodes if weighted else np.ones_like(nodes)
    inv_norm = _opnorm_many(np.linalg.inv(st.at(nodes)))
    logn = np.log(nodes)

    B = np.zeros((len(nodes), 3, 3))
    updates = []
    S = F0 = None
    for it in range(1, cfg.max_iter + 1):
        if it == 1:
            Bq = np.zeros_like(A_inf_q)
        else:
            Bq = CubicSpline(logn, B, axis=0)(np.log(q_nodes))
        Nq = force_many(A_inf_q + Bq, gamma)
        P0 = np.einsum("n,nij->nij", q_w, Nq).reshape(-1, n_per, 3, 3).sum(axis=1)
        P1 = np.einsum("n,nij->nij", q_w * q_nodes, Nq).reshape(-1, n_per, 3, 3).sum(axis=1)
        F0 = np.concatenate([np.cumsum(P0[::-1], axis=0)[::-1], np.zeros((1, 3, 3))]) + f0_tail
        F1 = np.concatenate([np.cumsum(P1[::-1], axis=0)[::-1], np.zeros((1, 3, 3))]) + f1_tail
        S = F1 - nodes[:, None, None] * F0
        if not np.all(np.isfinite(S)):
            return None, updates, nodes, F0, inv_norm
        diff = float(np.max(weight * _opnorm_many(S - B)))
        updates.append(diff)
        B = S
        size = float(np.max(weight * _opnorm_many(B)))
        if diff <= cfg.tol * max(1.0, size):
            break
        if it == 2 and updates[1] >= cfg.ratio_limit * updates[0]:
            return None, updates, nodes, F0, inv_norm
        if it > 2 and updates[-1] > updates[-2] and updates[-1] > 1e3 * cfg.tol * max(1.0, size):
            return None, updates, nodes, F0, inv_norm
    return B, updates, nodes, -F0, inv_norm


def _contraction_factor(updates, floor):
    ratios = [updates[k] / updates[k - 1] for k in range(1, len(updates)) if updates[k] > floor]
    if ratios:
        return float(ratios[-1])
    return float(updates[1] / updates[0]) if len(updates) > 1 and updates[0] > 0 else 0.0


def solve_cauchy_at_infinity(st: AsymptoticState, gamma: float, cfg: FixedPointConfig | None = None) -> CauchySolution:
    """Initial data at t = 0 of the solution asymptotic to ``st`` as t -> +inf."""
    cfg = cfg or FixedPointConfig()
    dd = degree_exponents(st, gamma)
    _check_branch(dd)
    weighted = dd.weighted
    mu = dd.mu if not weighted else (gamma - 4.0)  # N ~ t^{a - d(gamma-1)} = t^{-mu-2}
    root = _largest_real_root(det_polynomial(st))

    attempted = []
    T = float(cfg.T0)
    for _ in range(cfg.max_doublings + 1):
        while root >= 0.5 * T:
            T *= 2.0
        attempted.append(T)
        B, updates, nodes, dB, inv_norm = _iterate(st, gamma, T, cfg, weighted, mu)
        if B is not None:
            ball = float(np.max(inv_norm * _opnorm_many(B)))
            if ball <= cfg.ball_limit:
                break
            log.info("T=%g: fixed point leaves the ball (|A_inf^-1 B| = %.3g)", T, ball)
        else:
            log.info("T=%g: no contraction, updates %s", T, updates[:3])
        T *= 2.0
    else:
        raise NoContraction(f"no contraction for T in {attempted}", attempted_T=attempted)

    size = float(np.max(_opnorm_many(B)))
    factor = _contraction_factor(updates, 1e3 * cfg.tol * max(1.0, size))
    weight = nodes if weighted else 1.0
    grid = FixedPointGrid(
        T=T,
        T_max=float(nodes[-1]),
        nodes=nodes,
        B_values=B,
        dB_values=dB,
        weighted=weighted,
        ball_radius=float(np.max(weight * _opnorm_many(B))),
    )
    n_tmax = float(np.linalg.norm(force_many(st.at(np.array([grid.T_max])), gamma)[0], 2))
    tail_bound = n_tmax * grid.T_max**2 / (max(mu, 1e-3) * (mu + 1.0))

    A_T = st.at(T) + B[0]
    V_T = st.A1 + dB[0]
    h = cfg.backward_step or min(1e-3, T / 1e4)
    back = integrate(
        PhaseState.compressible(A_T, V_T, gamma),
        IntegratorConfig(step=h, t_start=T, t_end=0.0, sample_stride=max(1, int(round(T / h))) + 1),
    )
    return CauchySolution(
        initial=back.final_state(),
        contraction_factor=factor,
        grid=grid,
        degree=dd,
        iterations=len(updates),
        attempted_T=tuple(attempted),
        tail_bound=tail_bound,
        updates=tuple(updates),
    )


def wave_operator(st: AsymptoticState, gamma: float, cfg: FixedPointConfig | None = None) -> PhaseState:
    """W+(A1, A0) = (A(0), A'(0)); defined for det A1 > 0 and gamma > 4/3."""
    if not det3(st.A1) > 0.0:
        raise DetA1NotPositive("wave operator needs det A1 > 0")
    if not gamma > 4.0 / 3.0:
        raise PreconditionMu(f"wave operator needs gamma > 4/3, got {gamma:g}")
    return solve_cauchy_at_infinity(st, gamma, cfg).initial


# ---------------------------------------------------------------- extraction


@dataclass(frozen=True)
class TailConfig:
    decade: float = 10.0
    force: object = None  # optional callable stack -> stack overriding N(A)


@dataclass(frozen=True)
class AsymptoteReport:
    state: AsymptoticState
    force_exponent: float
    mu_hat: float
    tail_bound: float
    tail_model_error: float
    t_end: float
    tail_model: str = "free-line"


def _last_decade(traj: Trajectory, decade):
    t = traj.times
    return (t >= t[-1] / decade) & (t > 0)


def _line_tracks_fit(line, gamma, t_e, fit, span=2**20, band=2.0):
    s = t_e * 2.0 ** np.arange(0, int(math.log2(span)) + 1)
    A = line(s)
    if np.any(det_many(A) <= 0.0):
        return False
    ratio = _opnorm_many(force_many(A, gamma)) / (math.exp(fit.log_prefactor) * s**fit.exponent)
    return bool(np.all((ratio > 1.0 / band) & (ratio < band)))


def extract_asymptote(traj: Trajectory, gamma: float | None = None, tail_cfg: TailConfig | None = None, report=False):
    """Read (A0, A1) off a compressible trajectory.

    With t_e the final time,
        A1 = A'(t_e) + int_{t_e}^inf N,   A0 = A(t_e) - t_e A1 - int_{t_e}^inf (s - t_e) N,
    where A'(t_e) and A(t_e) already carry the integrator's quadrature of N
    over [0, t_e] and the improper tails are evaluated along the free line
    A(t_e) + (s - t_e) A'(t_e).
    """
    if traj.gamma is None:
        raise DomainError("asymptotes are extracted from compressible trajectories")
    gamma = traj.gamma if gamma is None else float(gamma)
    tail_cfg = tail_cfg or TailConfig()
    if traj.t_end < traj.times[-1] - 1e-9 or traj.t_end <= 0:
        raise DomainError("extraction needs a forward trajectory ending at its largest time")
    force = tail_cfg.force or (lambda A: force_many(A, gamma))

    mask = _last_decade(traj, tail_cfg.decade)
    n_norm = _opnorm_many(force(traj.A[mask]))
    A_e, V_e, t_e = traj.A[-1], traj.Adot[-1], float(traj.times[-1])
    if np.all(n_norm == 0.0):
        st = AsymptoticState(A_e - t_e * V_e, V_e)
        rep = AsymptoteReport(st, -np.inf, np.inf, 0.0, 0.0, t_e, "none")
        return (st, rep) if report else st

    fit = loglog_fit(traj.times[mask], n_norm)
    if not fit.exponent < -2.0:
        raise InsufficientDecay(f"|N(A(t))| decays like t^{fit.exponent:.3f}, need faster than t^-2")
    mu_hat = -fit.exponent - 2.0

    def line(s):
        return A_e[None] + (s - t_e)[:, None, None] * V_e[None]

    model = "free-line"
    if tail_cfg.force is not None:
        f0 = f1 = np.zeros((3, 3))
        model = "none"
    elif _line_tracks_fit(line, gamma, t_e, fit):
        f0, f1 = _far_tail(line, gamma, t_e, mu_hat)
    else:
        # the free line leaves the admissible set or departs from the observed
        # decay, as happens along degenerate directions of A_inf; continue each
        # component of N by the fitted power law instead
        model = "power-law"
        p = -fit.exponent
        n_e = force_many(A_e[None], gamma)[0]
        f0 = n_e * t_e / (p - 1.0)
        f1 = n_e * t_e**2 / (p - 2.0)
    A1 = V_e + f0
    A0 = A_e - t_e * A1 - (f1 - t_e * f0)
    c = math.exp(fit.log_prefactor)
    tail_bound = c * t_e ** (-mu_hat) / (mu_hat * (mu_hat + 1.0))
    st = AsymptoticState(A0, A1)
    rep = AsymptoteReport(st, fit.exponent, mu_hat, tail_bound, tail_bound * t_e ** (-mu_hat - 1.0), t_e, model)
    return (st, rep) if report else st


def integrate_forward(initial: PhaseState, t_end: float, step: float = 1e-3, sample_stride: int = 100) -> Trajectory:
    return integrate(initial, IntegratorConfig(step=step, t_end=t_end, sample_stride=sample_stride))


def scattering_map(
    st_minus: AsymptoticState,
    gamma: float,
    cfg: FixedPointConfig | None = None,
    t_end: float = 1000.0,
    step: float = 1e-3,
) -> AsymptoticState:
    """Sigma: incoming asymptote -> outgoing asymptote, for 4/3 < gamma < 2.

    ``st_minus`` is the forward asymptote of the time-reversed solution
    A(-t), so it obeys the same det A1 > 0 convention as outgoing states.
    """
    if not (4.0 / 3.0 < gamma < 2.0):
        raise PreconditionMu(f"scattering operator needs 4/3 < gamma < 2, got {gamma:g}")
    reversed_data = wave_operator(st_minus, gamma, cfg)
    data = PhaseState.compressible(reversed_data.A, -reversed_data.Adot, gamma)
    return extract_asymptote(integrate_forward(data, t_end, step), gamma)


def decay_check(traj: Trajectory, st: AsymptoticState, gamma: float, decade: float = 10.0, window=None) -> float:
    """Fitted exponent of |A(t) - A_inf(t)| over the last decade of the trajectory.

    ``window = (t_lo, t_hi)`` replaces the last decade; useful for large mu,
    where the gap sinks below the integrator's error floor well before t_end.
    """
    dd = degree_exponents(st, gamma)
    _check_branch(dd)
    if window is None:
        mask = _last_decade(traj, decade)
    else:
        t_lo, t_hi = float(window[0]), float(window[1])
        if not 0.0 < t_lo < t_hi:
            raise DomainError(f"decay window [{t_lo}, {t_hi}] must satisfy 0 < t_lo < t_hi")
        mask = traj.window(t_lo, t_hi)
    t = traj.times[mask]
    gap = _opnorm_many(traj.A[mask] - st.at(t))
    if np.all(gap == 0.0):
        return -np.inf
    fit = loglog_fit(t, gap)
    if not fit.exponent < 0.0:
        raise InsufficientDecay(f"|A - A_inf| does not decay (exponent {fit.exponent:.3f})")
    return fit.exponent
