"""Executable checks of the equivalence structure: deterministic crosscheck,
pointwise identity suite, holonomy (compatibility) defects, weak SLLG
residuals, and noise covariance statistics.

Every check is built to be falsifiable: the holonomy and residual suites
include negative controls, and the covariance check reports a 3-sigma
confidence interval rather than a bare point estimate.
"""

from dataclasses import dataclass, field

import numpy as np

from .fields import (ConfigurationError, Grid1D, cross, cumint, diff1, diff2,
                     dot, line_grid, norm, normalize, open_view)
from .hashimoto import curvature_torsion, reconstruct_frame, transform
from .heat import HeatConfig, heat_integrate
from .llg import LLGConfig, llg_integrate, llg_rhs, stable_dt
from .noise import NoiseModel
from .rotations import generator_rotation, rotation_angle
from .stochastic import SllgPath


def fit_loglog_slope(scales, errors) -> float:
    """Least-squares slope of log(error) vs log(scale); the convergence order."""
    s = np.log(np.asarray(scales, float))
    e = np.log(np.asarray(errors, float))
    return float(np.polyfit(s, e, 1)[0])


def localized_twist(x: np.ndarray, amplitude: float = 0.25, width: float = 6.0,
                    center: float = -15.0, power: int = 3) -> np.ndarray:
    """Rational-bump curvature profile q0 = A (1 + ((x-c)/w)^2)^(-power).

    Polynomial tails are the admissible decay class for the line-domain
    equivalence: the phase-rate boundary term behaves like (curvature)_xx /
    curvature, which decays like 1/x^2 here but tends to a positive constant
    (or diverges) for exponential or Gaussian tails.
    """
    return amplitude * (1.0 + ((x - center) / width) ** 2) ** (-float(power)) + 0j


@dataclass
class CrossCheckReport:
    alpha: float
    beta: float
    t_end: float
    levels: list                 # per level: dict with n, h, dt, times, disc, ...
    orders: list                 # observed orders between consecutive levels
    flagged: bool                # decay monitor failed somewhere

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "beta": self.beta, "t_end": self.t_end,
            "flagged": self.flagged, "orders": self.orders,
            "levels": [
                {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                 for k, v in lv.items()} for lv in self.levels],
        }


def crosscheck_deterministic(initial_q, x_min: float, x_max: float,
                             alpha: float, beta: float, t_end: float,
                             grid_sizes=(128, 256, 512),
                             m=(1.0, 0.0, 0.0), e0=(0.0, 1.0, 0.0),
                             samples: int = 10) -> CrossCheckReport:
    """Evolve matched initial data through both flows and compare transforms.

    initial_q: callable x -> complex q0(x) with left-boundary decay. Per
    refinement level the sphere map u0 is rebuilt from q0 by the frame march
    and the heat flow starts from the discrete transform of u0, so the two
    sides carry consistent discrete data (discrepancy is exactly 0 at t = 0).
    Both solvers run with dt at 90% of the stability bound; the discrepancy
    max_x |H(u(t)) - q(t)| is sampled along the flow.
    """
    m = np.asarray(m, float)
    e0 = np.asarray(e0, float)
    levels = []
    flagged = False
    for n in grid_sizes:
        g = line_grid(x_min, x_max, n)
        u0 = reconstruct_frame(np.asarray(initial_q(g.x), complex), g, m, e0).u
        q0 = transform(u0, g)
        dt = 0.9 * stable_dt(g, alpha, beta)
        n_steps = max(1, int(np.ceil(t_end / dt))) if t_end > 0 else 1
        dt = t_end / n_steps if t_end > 0 else dt
        stride = max(1, n_steps // samples)
        trl = llg_integrate(u0, g, LLGConfig(alpha=alpha, beta=beta, dt=dt,
                                             t_end=t_end, output_stride=stride))
        trh = heat_integrate(q0, g, HeatConfig(alpha=alpha, beta=beta, dt=dt,
                                               t_end=t_end, output_stride=stride))
        disc_max = np.array([np.max(np.abs(transform(u, g) - q))
                             for u, q in zip(trl.states, trh.states)])
        disc_l2 = np.array([np.sqrt(g.h * np.sum(np.abs(transform(u, g) - q) ** 2))
                            for u, q in zip(trl.states, trh.states)])
        flagged = flagged or not trh.decay_ok
        levels.append({"n": n, "h": g.h, "dt": dt, "times": trl.times,
                       "disc_max": disc_max, "disc_l2": disc_l2,
                       "sup_disc": float(np.max(disc_max)),
                       "decay_ok": trh.decay_ok})
    sups = [lv["sup_disc"] for lv in levels]
    if all(s > 0 for s in sups):
        orders = [float(np.log2(sups[i] / sups[i + 1])) for i in range(len(sups) - 1)]
    else:
        orders = []
    return CrossCheckReport(alpha=alpha, beta=beta, t_end=t_end, levels=levels,
                            orders=orders, flagged=flagged)


@dataclass
class IdentityReport:
    skipped: bool
    valid_fraction: float
    lagrange_max_rel: float
    uxx_expansion_max: float     # | |u_xx|^2 - (Theta^4 + Theta_x^2 + eta^2 Theta^2) |
    u_uxxx_max: float            # | <u, u_xxx> + 3 Theta Theta_x |
    ratio_identity_max: float    # | Theta_x^2 - |u x u_xx|^2 + eta^2 Theta^2 |

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def identity_suite(u: np.ndarray, g: Grid1D, eps: float | None = None) -> IdentityReport:
    """Node-wise residuals of the pointwise identities behind the equivalence.

    All residuals are evaluated with the discrete operators, so O(h^2) is the
    expected size on smooth maps; the Lagrange identity is purely algebraic
    and holds to round-off.
    """
    ct = curvature_torsion(u, g, eps)
    if ct.all_invalid:
        return IdentityReport(skipped=True, valid_fraction=0.0,
                              lagrange_max_rel=0.0, uxx_expansion_max=0.0,
                              u_uxxx_max=0.0, ratio_identity_max=0.0)
    mask = ct.valid_mask
    ux = diff1(u, g)
    uxx = diff2(u, g)
    uxxx = diff1(diff2(u, g), g)
    th, eta = ct.theta, ct.eta
    th_x = diff1(th, g)

    a2 = dot(ux, ux)
    b2 = dot(uxx, uxx)
    lag = np.abs(a2 * b2 - dot(cross(ux, uxx), cross(ux, uxx)) - dot(ux, uxx) ** 2)
    lag_rel = lag / np.maximum(a2 * b2, 1e-300)

    expansion = np.abs(b2 - (th ** 4 + th_x ** 2 + eta ** 2 * th ** 2))
    third = np.abs(dot(u, uxxx) + 3.0 * th * th_x)
    ratio = np.abs(th_x ** 2 - dot(cross(u, uxx), cross(u, uxx))
                   + eta ** 2 * th ** 2)

    return IdentityReport(
        skipped=False,
        valid_fraction=float(np.mean(mask)),
        lagrange_max_rel=float(np.max(lag_rel[mask])),
        uxx_expansion_max=float(np.max(expansion[mask])),
        u_uxxx_max=float(np.max(third[mask])),
        ratio_identity_max=float(np.max(ratio[mask])),
    )


def _time_generator(q_mid: np.ndarray, g: Grid1D, alpha: float, beta: float):
    """Deterministic frame time-evolution coefficients (a, b, c) = (p1, p2, C)."""
    qx = diff1(q_mid, g)
    p = (alpha + 1j * beta) * qx
    C = (-0.5 * beta * np.abs(q_mid) ** 2
         + 0.5j * alpha * cumint(qx * np.conj(q_mid) - np.conj(qx) * q_mid, g)).real
    return p.real, p.imag, C


@dataclass
class HolonomyReport:
    max_defect: float
    mean_defect: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def holonomy_defect(q_path, g: Grid1D, alpha: float, beta: float,
                    dt: float) -> HolonomyReport:
    """Plaquette-commutation defect of the space/time frame propagators.

    For every space-time plaquette, the two transport orders (x then t
    versus t then x) are composed from exact rotation exponentials of the
    midpoint generators; the defect is the rotation angle between them. It
    decays at higher order when q solves the heat equation (compatibility)
    and plateaus otherwise. Deterministic coefficients only.
    """
    q_path = np.asarray(q_path)
    h = g.h
    worst = 0.0
    total = 0.0
    count = 0
    for k in range(q_path.shape[0] - 1):
        qb, qt = q_path[k], q_path[k + 1]
        q_tmid = 0.5 * (qb + qt)
        # x-transport at the bottom / top time levels (x-midpoint generators)
        xb = 0.5 * (qb[:-1] + qb[1:])
        xt = 0.5 * (qt[:-1] + qt[1:])
        Xb = generator_rotation(h * xb.real, h * xb.imag, np.zeros(g.n - 1))
        Xt = generator_rotation(h * xt.real, h * xt.imag, np.zeros(g.n - 1))
        a, b, c = _time_generator(q_tmid, g, alpha, beta)
        T = generator_rotation(dt * a, dt * b, dt * c)
        P1 = T[1:] @ Xb                       # x-step then t-step
        P2 = Xt @ T[:-1]                      # t-step then x-step
        ang = rotation_angle(P1 @ np.swapaxes(P2, -1, -2))
        worst = max(worst, float(np.max(ang)))
        total += float(np.sum(ang))
        count += ang.size
    return HolonomyReport(max_defect=worst, mean_defect=total / max(count, 1))


@dataclass
class ResidualReport:
    mean: float
    stderr: float
    n_paths: int
    per_level: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr,
                "n_paths": self.n_paths, "per_level": self.per_level}


def weak_residual(path: SllgPath, g: Grid1D, alpha: float, beta: float,
                  phi: np.ndarray, noise_rule: str = "midpoint") -> float:
    """Weak SLLG residual R(phi) of one constructed path.

    R = <u(T) - u(0), phi> - int <beta u x u_xx - alpha u x (u x u_xx), phi> dt
        - sum <u x dW~, phi>, with Stratonovich midpoint sums. Spatial
    derivatives use the open-curve view of the grid: the reconstruction does
    not close on the circle, so periodic stencils would be invalid at the seam.

    noise_rule "left" replaces the Stratonovich midpoint in the noise pairing
    by the left endpoint (an Ito sum). That is a deliberate negative control:
    it must produce a clearly biased residual.
    """
    if noise_rule not in ("midpoint", "left"):
        raise ConfigurationError(f"unknown noise rule {noise_rule!r}")
    og = open_view(g)
    h = g.h
    dt = float(path.times[1] - path.times[0])
    R = h * float(np.sum(phi * (path.u[-1] - path.u[0])))
    for k in range(path.n_steps):
        u_mid = normalize(0.5 * (path.u[k] + path.u[k + 1]))
        R -= dt * h * float(np.sum(phi * llg_rhs(u_mid, og, alpha, beta)))
        u_noise = u_mid if noise_rule == "midpoint" else path.u[k]
        R -= h * float(np.sum(phi * cross(u_noise, path.dW_tilde[k])))
    return R


def sllg_weak_residual(paths, g: Grid1D, alpha: float, beta: float,
                       phi: np.ndarray, noise_rule: str = "midpoint") -> ResidualReport:
    """Ensemble mean and standard error of the weak residual over paths."""
    rs = np.array([weak_residual(p, g, alpha, beta, phi, noise_rule)
                   for p in paths])
    stderr = float(np.std(rs, ddof=1) / np.sqrt(len(rs))) if len(rs) > 1 else 0.0
    return ResidualReport(mean=float(np.mean(rs)), stderr=stderr, n_paths=len(rs))


@dataclass
class CovarianceReport:
    mc_estimate: float
    mc_ci3: float                # 3-sigma half width of the Monte Carlo estimate
    direct: float                # time-quadrature of the covariance formula
    n_paths: int
    t: float

    @property
    def within_3sigma(self) -> bool:
        return abs(self.mc_estimate - self.direct) <= self.mc_ci3

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["within_3sigma"] = self.within_3sigma
        return d


def _pairing(f: np.ndarray, w: np.ndarray, h: float) -> float:
    """L^2 pairing sum h f.w of two (n, 3) vector fields."""
    return h * float(np.sum(f * w))


def covariance_check(paths, g: Grid1D, nm: NoiseModel, phi: np.ndarray,
                     psi: np.ndarray) -> CovarianceReport:
    """Monte Carlo E[<W~, phi><W~, psi>] versus the frame-projection formula.

    Both sides are estimated from the same ensemble: the Monte Carlo side from
    the assembled W~ increments, the direct side by time quadrature of the
    ensemble-averaged products of frame projections onto the noise modes.
    """
    h = g.h
    c2 = nm.coeffs ** 2
    prods = []
    directs = []
    t = None
    for p in paths:
        if t is None:
            t = float(p.times[-1])
        dt = float(p.times[1] - p.times[0])
        Wt = np.sum(p.dW_tilde, axis=0)
        prods.append(_pairing(phi, Wt, h) * _pairing(psi, Wt, h))
        d = 0.0
        for k in range(p.n_steps):
            u_mid = 0.5 * (p.u[k] + p.u[k + 1])
            e_mid = 0.5 * (p.e[k] + p.e[k + 1])
            uxe_mid = 0.5 * (cross(p.u[k], p.e[k]) + cross(p.u[k + 1], p.e[k + 1]))
            for F in (u_mid, e_mid, uxe_mid):
                pf = h * (nm.basis @ np.sum(phi * F, axis=-1))   # (L,)
                ps = h * (nm.basis @ np.sum(psi * F, axis=-1))
                d += dt * float(np.sum(c2 * pf * ps))
        directs.append(d)
    prods = np.array(prods)
    n = len(prods)
    mc = float(np.mean(prods))
    ci3 = float(3.0 * np.std(prods, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return CovarianceReport(mc_estimate=mc, mc_ci3=ci3,
                            direct=float(np.mean(directs)), n_paths=n, t=t)
