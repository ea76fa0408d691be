"""Deterministic Landau-Lifshitz-Gilbert flow u_t = beta u x u_xx - alpha u x (u x u_xx)
and the companion curvature/torsion evolution used as an independent oracle.
"""

from dataclasses import dataclass, field

import numpy as np

from .fields import (Grid1D, BlowUpError, ConfigurationError, cross, diff1,
                     diff2, normalize)
from .hashimoto import CurvatureTorsion


def stable_dt(g: Grid1D, alpha: float, beta: float, safety: float = 0.2) -> float:
    """Explicit-step bound dt <= safety * h^2 / max(alpha, |beta|)."""
    scale = max(alpha, abs(beta))
    if scale == 0.0:
        return np.inf
    return safety * g.h * g.h / scale


@dataclass
class LLGConfig:
    alpha: float
    beta: float
    dt: float
    t_end: float
    renormalize: bool = True
    output_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.alpha < 0:
            raise ConfigurationError(f"damping alpha must be >= 0, got {self.alpha}")
        if self.t_end < 0:
            raise ConfigurationError(f"t_end must be >= 0, got {self.t_end}")
        if self.output_stride < 1:
            raise ConfigurationError("output_stride must be >= 1")

    def check_stability(self, g: Grid1D):
        bound = stable_dt(g, self.alpha, self.beta)
        if self.dt > bound:
            raise ConfigurationError(
                f"dt = {self.dt:.3e} exceeds the stability bound {bound:.3e} "
                f"(0.2 h^2 / max(alpha, |beta|))")


@dataclass
class Trajectory:
    """Sampled states of a time integration; states[k] is at times[k]."""
    times: np.ndarray
    states: list = field(default_factory=list)
    decay_ok: bool = True   # left-boundary decay monitor (line-grid heat flow)


def llg_rhs(u: np.ndarray, g: Grid1D, alpha: float, beta: float) -> np.ndarray:
    uxx = diff2(u, g)
    uxuxx = cross(u, uxx)
    return beta * uxuxx - alpha * cross(u, uxuxx)


def rk4_step(y, dt, f):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def heun_step(y, dt, f):
    k1 = f(y)
    return y + 0.5 * dt * (k1 + f(y + dt * k1))


def _check_finite(y, step, what):
    if not np.all(np.isfinite(y)):
        raise BlowUpError(f"{what} blew up at step {step}: non-finite values "
                          f"(max |y| before failure unavailable)")


def llg_integrate(u0: np.ndarray, g: Grid1D, cfg: LLGConfig) -> Trajectory:
    """RK4 in time with per-step projection back to the sphere."""
    cfg.check_stability(g)
    n_steps = int(round(cfg.t_end / cfg.dt))
    rhs = lambda u: llg_rhs(u, g, cfg.alpha, cfg.beta)
    u = u0.copy()
    times = [0.0]
    states = [u.copy()]
    for k in range(n_steps):
        u = rk4_step(u, cfg.dt, rhs)
        _check_finite(u, k, "LLG")
        if cfg.renormalize:
            u = normalize(u)
        if (k + 1) % cfg.output_stride == 0 or k == n_steps - 1:
            times.append((k + 1) * cfg.dt)
            states.append(u.copy())
    return Trajectory(times=np.array(times), states=states)


def curvature_torsion_rhs(ct: CurvatureTorsion, g: Grid1D, alpha: float,
                          beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives of (Theta, eta) along the LLG flow.

    Theta' = alpha (Theta_xx - eta^2 Theta) - beta (eta_x Theta + 2 Theta_x eta)
    eta'   = alpha eta_xx + 2 alpha (eta Theta_x / Theta)_x + alpha eta Theta^2
             + beta (Theta_xx / Theta + Theta^2 / 2 - eta^2)_x

    Divisions by Theta are regularized with the same eps mask used by the
    curvature/torsion extraction.
    """
    th, eta, eps = ct.theta, ct.eta, ct.eps
    th_safe = np.maximum(th, eps)
    th_x = diff1(th, g)
    th_xx = diff2(th, g)
    eta_x = diff1(eta, g)
    d_theta = alpha * (th_xx - eta * eta * th) - beta * (eta_x * th + 2.0 * th_x * eta)
    d_eta = (alpha * diff2(eta, g)
             + 2.0 * alpha * diff1(eta * th_x / th_safe, g)
             + alpha * eta * th * th
             + beta * diff1(th_xx / th_safe + 0.5 * th * th - eta * eta, g))
    return d_theta, d_eta


def exchange_energy(u: np.ndarray, g: Grid1D) -> float:
    """E = sum h |u_x|^2 (discrete exchange energy)."""
    ux = diff1(u, g)
    return float(g.h * np.sum(ux * ux))
