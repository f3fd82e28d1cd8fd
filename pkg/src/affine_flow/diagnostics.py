"""Post-processing of trajectories: moment of inertia, virial identity, growth rates."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dynamics import PhaseState, Trajectory, comp_rhs
from .errors import DomainError, TooFewSamples, WindowOutOfRange


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    log_prefactor: float
    rms_residual: float
    n: int


def loglog_fit(t, y) -> PowerLawFit:
    """Least-squares fit of log y = exponent * log t + c."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (t > 0) & (y > 0) & np.isfinite(y)
    if np.count_nonzero(keep) < 3:
        raise TooFewSamples("power-law fit needs at least 3 positive samples")
    lt, ly = np.log(t[keep]), np.log(y[keep])
    coef, res, *_ = np.polyfit(lt, ly, 1, full=True)
    rms = float(np.sqrt(res[0] / len(lt))) if len(res) else 0.0
    return PowerLawFit(float(coef[0]), float(coef[1]), rms, int(len(lt)))


def growth_exponent_p(gamma: float) -> float:
    """Lower-bound exponent for volume growth, vol >~ t^p."""
    return 3.0 if gamma <= 5.0 / 3.0 else 2.0 / (gamma - 1.0)


def moment(s: PhaseState) -> float:
    """X = tr(A A^T) / 2."""
    return 0.5 * float(np.sum(s.A * s.A))


def moment_second_derivative(s: PhaseState) -> float:
    """Exact X'' = |A'|^2 + <A, A''> along a compressible solution."""
    return float(np.sum(s.Adot * s.Adot) + np.sum(s.A * comp_rhs(s.A, s.gamma)))


def _require_compressible(traj):
    if traj.gamma is None:
        raise DomainError("this diagnostic applies to compressible trajectories only")


def virial_residual(traj: Trajectory, gamma: float | None = None) -> float:
    """Max over interior samples of |X''_fd - 2 E_K - 3 (gamma-1) E_P|.

    X'' is a second-order central difference of the sampled X' = tr(A A'^T),
    so the trajectory must be uniformly sampled.  Differencing X' instead of
    X twice keeps round-off at eps |X'| / h rather than eps |X| / h^2, which
    matters once X ~ t^2 is large.
    """
    _require_compressible(traj)
    g = traj.gamma if gamma is None else float(gamma)
    if len(traj) < 3:
        raise TooFewSamples("virial residual needs at least 3 samples")
    dt = np.diff(traj.times)
    h = float(np.mean(dt))
    if np.max(np.abs(dt - h)) > 1e-9 * max(1.0, abs(h)):
        raise DomainError("virial residual needs uniform sampling")
    Xp = np.sum(traj.A * traj.Adot, axis=(1, 2))
    Xpp = (Xp[2:] - Xp[:-2]) / (2.0 * h)
    d = traj.diagnostics
    rhs = 2.0 * d["E_K"][1:-1] + 3.0 * (g - 1.0) * d["E_P"][1:-1]
    return float(np.max(np.abs(Xpp - rhs)))


@dataclass(frozen=True)
class GrowthReport:
    diam_slope: float
    det_exponent: float
    window: tuple[float, float]
    residuals: dict

    def to_dict(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        return out


def _check_window(traj, window):
    if window is None:
        window = (traj.times[-1] / 4.0, traj.times[-1])
    t_lo, t_hi = float(window[0]), float(window[1])
    if t_lo < 1.0 or t_hi <= 2.0 * t_lo:
        raise WindowOutOfRange(f"window [{t_lo}, {t_hi}] needs t_lo >= 1 and t_hi > 2 t_lo")
    if t_lo < traj.times[0] or t_hi > traj.times[-1] * (1 + 1e-12):
        raise WindowOutOfRange(f"window [{t_lo}, {t_hi}] exceeds trajectory span")
    return t_lo, t_hi


def growth_fit(traj: Trajectory, window=None) -> GrowthReport:
    """Late-time slope of the diameter and log-log slope of det A.

    Default window is [t_end / 4, t_end].
    """
    t_lo, t_hi = _check_window(traj, window)
    mask = traj.window(t_lo, t_hi)
    t = traj.times[mask]
    if len(t) < 3:
        raise TooFewSamples("growth fit window holds fewer than 3 samples")
    diam = 2.0 * traj.diagnostics["lam1"][mask]
    coef, res, *_ = np.polyfit(t, diam, 1, full=True)
    diam_rms = float(np.sqrt(res[0] / len(t))) if len(res) else 0.0
    det_fit = loglog_fit(t, traj.diagnostics["det"][mask])
    return GrowthReport(
        diam_slope=float(coef[0]),
        det_exponent=det_fit.exponent,
        window=(t_lo, t_hi),
        residuals={"diam_rms": diam_rms, "log_det_rms": det_fit.rms_residual, "n": int(len(t))},
    )


def potential_decay_exponent(traj: Trajectory, window=None) -> float:
    """Fitted exponent q in E_P ~ t^q over the window."""
    _require_compressible(traj)
    t_lo, t_hi = _check_window(traj, window)
    mask = traj.window(t_lo, t_hi)
    return loglog_fit(traj.times[mask], traj.diagnostics["E_P"][mask]).exponent
