"""1D grids, finite-difference operators, cumulative quadrature and 3-vector algebra.

All fields are plain numpy arrays aligned to a Grid1D: shape (n,) for scalar
(real or complex) fields and (n, 3) for vector fields.
"""

from dataclasses import dataclass

import numpy as np


class ConfigurationError(ValueError):
    """Invalid grid / solver configuration."""


class BlowUpError(RuntimeError):
    """A time integration produced non-finite values."""


@dataclass(frozen=True)
class Grid1D:
    kind: str                 # "periodic" or "line"
    n: int
    h: float
    x: np.ndarray
    basepoint_index: int = 0

    def __post_init__(self):
        if self.kind not in ("periodic", "line"):
            raise ConfigurationError(f"unknown grid kind {self.kind!r}")
        if self.n < 4:
            raise ConfigurationError(f"need n >= 4 nodes, got {self.n}")
        if not self.h > 0:
            raise ConfigurationError(f"need positive spacing, got h={self.h}")
        if not 0 <= self.basepoint_index < self.n:
            raise ConfigurationError(
                f"basepoint index {self.basepoint_index} outside [0, {self.n})")

    @property
    def periodic(self) -> bool:
        return self.kind == "periodic"

    @property
    def length(self) -> float:
        # circumference for periodic grids, extent for line grids
        return self.n * self.h if self.periodic else (self.n - 1) * self.h

    @property
    def basepoint(self) -> float:
        return float(self.x[self.basepoint_index])


def periodic_grid(circumference: float, n: int, basepoint_index: int = 0) -> Grid1D:
    if not circumference > 0:
        raise ConfigurationError(f"circumference must be positive, got {circumference}")
    if n < 4:
        raise ConfigurationError(f"need n >= 4 nodes, got {n}")
    h = circumference / n
    return Grid1D("periodic", n, h, h * np.arange(n), basepoint_index)


def line_grid(x_min: float, x_max: float, n: int, basepoint_index: int = 0) -> Grid1D:
    if not x_max > x_min:
        raise ConfigurationError(f"degenerate extent [{x_min}, {x_max}]")
    if n < 4:
        raise ConfigurationError(f"need n >= 4 nodes, got {n}")
    h = (x_max - x_min) / (n - 1)
    return Grid1D("line", n, h, np.linspace(x_min, x_max, n), basepoint_index)


def make_grid(spec: dict) -> Grid1D:
    """Build a grid from a flat descriptor, e.g. from a CLI config.

    Keys: domain ("periodic"|"line"), n, and circumference (periodic) or
    x_min/x_max (line); optional basepoint_index.
    """
    kind = spec.get("domain", "periodic")
    n = int(spec["n"])
    b = int(spec.get("basepoint_index", 0))
    if kind == "periodic":
        return periodic_grid(float(spec.get("circumference", 2.0 * np.pi)), n, b)
    if kind == "line":
        return line_grid(float(spec["x_min"]), float(spec["x_max"]), n, b)
    raise ConfigurationError(f"unknown domain kind {kind!r}")


def _check_shape(f: np.ndarray, g: Grid1D):
    if f.shape[0] != g.n:
        raise ConfigurationError(f"field length {f.shape[0]} != grid n {g.n}")


def diff1(f: np.ndarray, g: Grid1D) -> np.ndarray:
    """Second-order first derivative; one-sided stencils at line endpoints."""
    _check_shape(f, g)
    h = g.h
    if g.periodic:
        return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * h)
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    d[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return d


def diff2(f: np.ndarray, g: Grid1D) -> np.ndarray:
    """Second-order second derivative; one-sided stencils at line endpoints."""
    _check_shape(f, g)
    h2 = g.h * g.h
    if g.periodic:
        return (np.roll(f, -1, axis=0) - 2.0 * f + np.roll(f, 1, axis=0)) / h2
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h2
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
    d[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h2
    return d


def cumint(f: np.ndarray, g: Grid1D) -> np.ndarray:
    """Cumulative trapezoid of f from the basepoint; value 0 at the basepoint.

    Integration runs in increasing node index. On periodic grids it is
    single-sheeted: no wraparound segment is added, so the result is in
    general not periodic (a recorded defect of the basepoint-anchored
    integral on the circle).
    """
    _check_shape(f, g)
    F = np.empty_like(f)
    F[0] = 0.0
    np.cumsum(0.5 * g.h * (f[1:] + f[:-1]), axis=0, out=F[1:])
    return F - F[g.basepoint_index]


def boundary_decay_ok(q: np.ndarray, g: Grid1D, frac: float = 0.05,
                      rel_tol: float = 1e-6) -> bool:
    """Monitor for left-boundary decay on line grids.

    The nonlocal integrals use the left endpoint as a stand-in for -inf,
    which is only valid when the data decays there: max |q| over the
    leftmost `frac` of nodes must not exceed rel_tol * max |q|.
    Periodic grids pass trivially.
    """
    if g.periodic:
        return True
    m = np.max(np.abs(q))
    if m == 0.0:
        return True
    k = max(1, int(np.ceil(frac * g.n)))
    return bool(np.max(np.abs(q[:k])) <= rel_tol * m)


def open_view(g: Grid1D) -> Grid1D:
    """The same nodes treated as an open curve (one-sided stencils at the seam).

    Frame reconstruction on the circle does not wrap, so reconstructed fields
    are smooth as open curves but generally jump at the seam; differentiating
    them with periodic stencils would be invalid there.
    """
    if not g.periodic:
        return g
    return Grid1D("line", g.n, g.h, g.x, g.basepoint_index)


# --- 3-vector algebra on (n, 3) (or (..., 3)) arrays ---

def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.cross(a, b)


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


def norm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(a * a, axis=-1))


def normalize(a: np.ndarray) -> np.ndarray:
    return a / norm(a)[..., None]


def check_unit(u: np.ndarray, tol: float = 1e-12):
    """Assert every row of u is a unit vector (sphere-valued field)."""
    dev = np.max(np.abs(norm(u) - 1.0))
    if dev > tol:
        raise ConfigurationError(f"field is not sphere-valued: max | |u|-1 | = {dev:.3e}")
