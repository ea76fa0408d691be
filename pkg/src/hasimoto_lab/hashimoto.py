"""The curvature/torsion map u -> q = Theta * exp(i int eta) and its inverse.

A sphere-valued field u carries the moving frame {u, u_x/|u_x|, u x u_x/|u_x|}
with curvature Theta = |u_x| and torsion eta = <u x u_x, u_xx> / |u_x|^2.
The complex field q combines both; the sphere map is recovered (up to the
initial frame) by integrating the spatial frame ODE

    d/dx (u, e, u x e)^T = K(q1, q2, 0) (u, e, u x e)^T

node to node with exact rotation exponentials of the averaged generator.
"""

from dataclasses import dataclass

import numpy as np

from .fields import (Grid1D, ConfigurationError, cross, cumint, diff1, diff2,
                     dot, norm)
from .rotations import generator_rotation, rotation_angle


@dataclass
class CurvatureTorsion:
    theta: np.ndarray        # curvature, >= 0
    eta: np.ndarray          # torsion, meaningful only on valid_mask
    valid_mask: np.ndarray   # theta > eps
    eps: float

    @property
    def all_invalid(self) -> bool:
        return not bool(np.any(self.valid_mask))


@dataclass
class FrameField:
    u: np.ndarray   # (n, 3) sphere-valued
    e: np.ndarray   # (n, 3) unit, tangent to the sphere at u

    @property
    def uxe(self) -> np.ndarray:
        return cross(self.u, self.e)

    def as_matrix(self) -> np.ndarray:
        """(n, 3, 3) with rows (u, e, u x e)."""
        return np.stack([self.u, self.e, self.uxe], axis=-2)

    def orthonormality_defect(self) -> float:
        return float(max(np.max(np.abs(norm(self.u) - 1.0)),
                         np.max(np.abs(norm(self.e) - 1.0)),
                         np.max(np.abs(dot(self.u, self.e)))))


def _resolve_eps(theta_max: float, eps) -> float:
    # default regularization scales with the field; floor avoids 0/0 for u == const
    if eps is None:
        eps = 1e-8 * theta_max
    return max(float(eps), 1e-300)


def curvature_torsion(u: np.ndarray, g: Grid1D, eps: float | None = None) -> CurvatureTorsion:
    ux = diff1(u, g)
    uxx = diff2(u, g)
    theta = norm(ux)
    e = _resolve_eps(float(np.max(theta)), eps)
    # e*e can underflow to zero for degenerate inputs; keep the floor finite
    eta = dot(cross(u, ux), uxx) / np.maximum(theta * theta, max(e * e, 1e-300))
    mask = theta > e
    return CurvatureTorsion(theta=theta, eta=eta, valid_mask=mask, eps=e)


def accumulated_phase(ct: CurvatureTorsion, g: Grid1D) -> np.ndarray:
    """omega(x) = int_a^x eta dy, with eta taken as 0 where the mask is invalid."""
    eta = np.where(ct.valid_mask, ct.eta, 0.0)
    return cumint(eta, g)


def transform(u: np.ndarray, g: Grid1D, eps: float | None = None) -> np.ndarray:
    """q = Theta * exp(i omega), phase anchored to omega(a) = 0."""
    ct = curvature_torsion(u, g, eps)
    omega = accumulated_phase(ct, g)
    return ct.theta * np.exp(1j * omega)


def inverse_identities(q: np.ndarray, g: Grid1D, eps: float | None = None) -> CurvatureTorsion:
    """Recover (Theta, eta) directly from q: Theta = |q|, eta = Im(conj(q) q_x)/|q|^2."""
    qx = diff1(q, g)
    theta = np.abs(q)
    e = _resolve_eps(float(np.max(theta)), eps)
    eta = np.imag(np.conj(q) * qx) / np.maximum(theta * theta, max(e * e, 1e-300))
    mask = theta > e
    return CurvatureTorsion(theta=theta, eta=eta, valid_mask=mask, eps=e)


def _check_initial_frame(m: np.ndarray, e0: np.ndarray, tol: float = 1e-10):
    m = np.asarray(m, float)
    e0 = np.asarray(e0, float)
    if abs(np.linalg.norm(m) - 1.0) > tol or abs(np.linalg.norm(e0) - 1.0) > tol \
            or abs(float(np.dot(m, e0))) > tol:
        raise ConfigurationError(
            "initial frame must satisfy |m| = |e0| = 1 and <m, e0> = 0")
    return m, e0


def reconstruct_frame(q: np.ndarray, g: Grid1D, m: np.ndarray, e0: np.ndarray) -> FrameField:
    """Integrate the spatial frame ODE from the basepoint with u(a) = m, e(a) = e0.

    Node-to-node update uses the exact rotation exponential of the generator
    built from the midpoint of q at adjacent nodes (second order, exactly
    orthonormal). On periodic grids the march does not wrap: the closure
    defect at the seam is reported by closure_defect, not enforced.
    """
    m, e0 = _check_initial_frame(m, e0)
    n = g.n
    b = g.basepoint_index
    q_mid = 0.5 * (q[:-1] + q[1:])
    R = generator_rotation(g.h * q_mid.real, g.h * q_mid.imag, np.zeros(n - 1))
    F = np.empty((n, 3, 3))
    F[b] = np.stack([m, e0, np.cross(m, e0)])
    for j in range(b, n - 1):
        F[j + 1] = R[j] @ F[j]
    for j in range(b, 0, -1):
        F[j - 1] = R[j - 1].T @ F[j]
    return FrameField(u=F[:, 0, :].copy(), e=F[:, 1, :].copy())


def closure_defect(q: np.ndarray, g: Grid1D, f: FrameField) -> float:
    """Rotation-angle mismatch when the frame march is continued across the seam.

    Only meaningful on periodic grids; propagates the last frame through the
    wrap segment and compares with the frame at the basepoint side.
    """
    if not g.periodic:
        return 0.0
    q_mid = 0.5 * (q[-1] + q[0])
    R = generator_rotation(g.h * q_mid.real, g.h * q_mid.imag, 0.0)
    F = f.as_matrix()
    wrapped = R @ F[-1]
    return float(rotation_angle(wrapped @ F[0].T))
