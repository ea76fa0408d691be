"""Stratonovich dynamics: the stochastic nonlinear heat equation for q, the
frame time evolution, and the weak construction of the stochastic LLG flow.

Scheme: Heun predictor-corrector on drift coefficients (Stratonovich
consistent) combined with exact rotation / phase exponentials for the
group-valued updates, so |u| = |e| = 1 and <u, e> = 0 hold path-wise to
round-off and |q| is untouched by the multiplicative phase noise.
"""

from dataclasses import dataclass

import numpy as np

from .fields import (Grid1D, BlowUpError, ConfigurationError, cross, cumint,
                     diff1)
from .hashimoto import FrameField, reconstruct_frame
from .heat import heat_rhs
from .llg import stable_dt
from .noise import (NoiseIncrement, NoiseModel, TAG_PATH, derive_seed,
                    make_noise_model, noise_fields, sample_increments)
from .rotations import generator_rotation


@dataclass
class InternalCoeffs:
    p: np.ndarray      # complex, (alpha + i beta) q_x
    C: np.ndarray      # real by construction
    dPsi: np.ndarray   # increment of Psi over the current step; dPsi(a) = 0


def internal_coeffs(q: np.ndarray, g: Grid1D, alpha: float, beta: float,
                    dW1: np.ndarray, dW2: np.ndarray,
                    midpoint_q: np.ndarray) -> InternalCoeffs:
    """p, C and the Psi increment for the frame time evolution.

    midpoint_q is the Stratonovich midpoint supplied by the predictor stage;
    it enters only the noise integral dPsi.
    """
    qx = diff1(q, g)
    p = (alpha + 1j * beta) * qx
    c_complex = (-0.5 * beta * np.abs(q) ** 2
                 + 0.5j * alpha * cumint(qx * np.conj(q) - np.conj(qx) * q, g))
    # the integrand is purely imaginary, so C is real up to round-off
    C = c_complex.real
    dPsi = cumint(midpoint_q.imag * dW1 - midpoint_q.real * dW2, g)
    return InternalCoeffs(p=p, C=C, dPsi=dPsi)


def frame_time_step(f: FrameField, coeffs: InternalCoeffs, dW1: np.ndarray,
                    dW2: np.ndarray, dPsi: np.ndarray, dt: float,
                    ortho_tol: float = 1e-8) -> FrameField:
    """One time step of the frame system by an exact rotation per node.

    Total generator entries (deterministic * dt + noise):
    a = p1 dt + dW1, b = p2 dt + dW2, c = C dt + dPsi.
    """
    if f.orthonormality_defect() > ortho_tol:
        raise ConfigurationError("frame_time_step requires an orthonormal frame")
    a = coeffs.p.real * dt + dW1
    b = coeffs.p.imag * dt + dW2
    c = coeffs.C * dt + dPsi
    R = generator_rotation(a, b, c)              # (n, 3, 3)
    F = f.as_matrix()
    F_new = R @ F
    return FrameField(u=F_new[:, 0, :], e=F_new[:, 1, :])


def stochastic_heat_step(q: np.ndarray, g: Grid1D, alpha: float, beta: float,
                         dt: float, inc: NoiseIncrement):
    """One Stratonovich (Heun) step of the stochastic nonlinear heat equation.

    Drift is the expanded-form deterministic right-hand side with the
    basepoint-anchored nonlocal integral; additive noise is d dx(W1 + i W2);
    the multiplicative phase noise acts as an exact rotation
    q <- q exp(-i dPsi) with dPsi evaluated at the Stratonovich midpoint.
    The additive increment is split half before / half after the rotation:
    the two noises are driven by the same Brownian motions, and applying the
    whole increment on one side leaves a mean O(dt) cross term per step that
    accumulates to an O(1) weak bias. Returns (q_new, q_mid, dPsi).
    """
    additive = inc.dxW1 + 1j * inc.dxW2
    k1 = heat_rhs(q, g, alpha, beta, "expanded")
    dPsi0 = cumint(q.imag * inc.dW1 - q.real * inc.dW2, g)
    q_pred = (q + dt * k1 + 0.5 * additive) * np.exp(-1j * dPsi0) + 0.5 * additive
    q_mid = 0.5 * (q + q_pred)
    dPsi = cumint(q_mid.imag * inc.dW1 - q_mid.real * inc.dW2, g)
    k2 = heat_rhs(q_pred, g, alpha, beta, "expanded")
    q_new = (q + 0.5 * dt * (k1 + k2) + 0.5 * additive) * np.exp(-1j * dPsi) \
        + 0.5 * additive
    if not np.all(np.isfinite(q_new)):
        raise BlowUpError("stochastic heat step produced non-finite values")
    return q_new, q_mid, dPsi


@dataclass
class SLLGConfig:
    alpha: float
    beta: float
    dt: float
    t_end: float
    n_modes: int = 4
    coeff_profile: str = "flat"
    coeff_decay: float = 1.0
    coeff_amplitude: float = 1.0

    def __post_init__(self):
        if self.dt <= 0 or self.t_end < 0:
            raise ConfigurationError("need dt > 0 and t_end >= 0")
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")

    def check_stability(self, g: Grid1D):
        bound = stable_dt(g, self.alpha, self.beta)
        if self.dt > bound:
            raise ConfigurationError(
                f"dt = {self.dt:.3e} exceeds the stability bound {bound:.3e}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class SllgPath:
    times: np.ndarray       # (K+1,)
    q: np.ndarray           # (K+1, n) complex
    u: np.ndarray           # (K+1, n, 3)
    e: np.ndarray           # (K+1, n, 3)
    dW_tilde: np.ndarray    # (K, n, 3) assembled noise increments (midpoint frames)
    seed: int

    @property
    def n_steps(self) -> int:
        return self.dW_tilde.shape[0]

    def frame(self, k: int) -> FrameField:
        return FrameField(u=self.u[k], e=self.e[k])


def run_sllg(q0: np.ndarray, g: Grid1D, m: np.ndarray, e0: np.ndarray,
             cfg: SLLGConfig, master_seed: int) -> SllgPath:
    """Construct one weak SLLG path from a stochastic heat path of q.

    Per step: (1) advance q; (2) advance the basepoint frame in time with
    coefficients at x = a (where the nonlocal integrals vanish); (3) rebuild
    the full frame field from q by the spatial march, which enforces the
    curvature/torsion relation between u and q by construction; (4) assemble
    the increments of W-tilde = int e dW2 + (e x u) dW1 + u dW3 with
    midpoint frames.
    """
    cfg.check_stability(g)
    nm = make_noise_model(g, cfg.n_modes, master_seed,
                          cfg.coeff_profile, cfg.coeff_decay,
                          cfg.coeff_amplitude)
    K = cfg.n_steps
    n = g.n
    b = g.basepoint_index

    qs = np.empty((K + 1, n), dtype=complex)
    us = np.empty((K + 1, n, 3))
    es = np.empty((K + 1, n, 3))
    dW_tilde = np.empty((K, n, 3))

    q = q0.astype(complex).copy()
    f = reconstruct_frame(q, g, m, e0)
    qs[0], us[0], es[0] = q, f.u, f.e

    for k in range(K):
        inc = noise_fields(nm, sample_increments(nm, cfg.dt, k))
        q_new, q_mid, _ = stochastic_heat_step(q, g, cfg.alpha, cfg.beta,
                                               cfg.dt, inc)
        ic = internal_coeffs(q_mid, g, cfg.alpha, cfg.beta, inc.dW1, inc.dW2,
                             q_mid)
        ic_base = InternalCoeffs(p=ic.p[b:b + 1], C=ic.C[b:b + 1],
                                 dPsi=ic.dPsi[b:b + 1])   # = 0 at the basepoint
        base = frame_time_step(
            FrameField(u=f.u[b:b + 1], e=f.e[b:b + 1]), ic_base,
            inc.dW1[b:b + 1], inc.dW2[b:b + 1], ic_base.dPsi, cfg.dt)
        f_new = reconstruct_frame(q_new, g, base.u[0], base.e[0])

        u_mid = 0.5 * (f.u + f_new.u)
        e_mid = 0.5 * (f.e + f_new.e)
        exu_mid = 0.5 * (cross(f.e, f.u) + cross(f_new.e, f_new.u))
        dW_tilde[k] = (e_mid * inc.dW2[:, None]
                       + exu_mid * inc.dW1[:, None]
                       + u_mid * inc.dW3[:, None])

        q, f = q_new, f_new
        qs[k + 1], us[k + 1], es[k + 1] = q, f.u, f.e

    return SllgPath(times=cfg.dt * np.arange(K + 1), q=qs, u=us, e=es,
                    dW_tilde=dW_tilde, seed=master_seed)


def run_sllg_ensemble(q0: np.ndarray, g: Grid1D, m: np.ndarray, e0: np.ndarray,
                      cfg: SLLGConfig, master_seed: int, n_paths: int):
    """Yield independent SLLG paths with seeds derived from the master seed."""
    for i in range(n_paths):
        yield run_sllg(q0, g, m, e0, cfg, derive_seed(master_seed, TAG_PATH, i))
