"""Truncated spectral Wiener noise on the circle.

W^i(t, x) = sum_l c_l sigma_l(x) beta^i_l(t), i in {1, 2, 3}, with sigma_l a
real Fourier basis orthonormal in L^2 of the circle (so derivatives are
analytic) and beta^i_l independent scalar Brownian motions. Increments are a
pure function of (master_seed, step_index), so identical seeds reproduce
identical paths bit for bit.
"""

from dataclasses import dataclass, field

import numpy as np

from .fields import Grid1D, ConfigurationError


def fourier_basis(g: Grid1D, n_modes: int) -> tuple[np.ndarray, np.ndarray]:
    """First n_modes real Fourier modes on the circle and their x-derivatives.

    Mode order: constant, then (cos, sin) pairs of increasing frequency.
    Returns (basis, basis_x), each of shape (n_modes, n).
    """
    if not g.periodic:
        raise ConfigurationError("spectral noise basis requires a periodic grid")
    lam = g.length
    basis = np.empty((n_modes, g.n))
    basis_x = np.empty((n_modes, g.n))
    amp = np.sqrt(2.0 / lam)
    for l in range(n_modes):
        if l == 0:
            basis[l] = 1.0 / np.sqrt(lam)
            basis_x[l] = 0.0
            continue
        m = (l + 1) // 2
        k = 2.0 * np.pi * m / lam
        if l % 2 == 1:
            basis[l] = amp * np.cos(k * g.x)
            basis_x[l] = -amp * k * np.sin(k * g.x)
        else:
            basis[l] = amp * np.sin(k * g.x)
            basis_x[l] = amp * k * np.cos(k * g.x)
    return basis, basis_x


def coefficient_profile(n_modes: int, profile: str = "flat", decay: float = 1.0,
                        amplitude: float = 1.0) -> np.ndarray:
    """c_l for l = 1..n_modes: amplitude ("flat") or amplitude * l^(-decay) ("power")."""
    l = np.arange(1, n_modes + 1, dtype=float)
    if profile == "flat":
        return amplitude * np.ones(n_modes)
    if profile == "power":
        return amplitude * l ** (-decay)
    raise ConfigurationError(f"unknown coefficient profile {profile!r}")


@dataclass
class NoiseIncrement:
    dW1: np.ndarray    # (n,)
    dW2: np.ndarray
    dW3: np.ndarray
    dxW1: np.ndarray   # analytic spatial derivative of the W^1 increment
    dxW2: np.ndarray


@dataclass
class NoiseModel:
    grid: Grid1D
    n_modes: int
    coeffs: np.ndarray
    master_seed: int
    basis: np.ndarray = field(init=False)
    basis_x: np.ndarray = field(init=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, float)
        if self.n_modes < 0:
            raise ConfigurationError("mode count must be >= 0")
        if self.coeffs.shape != (self.n_modes,):
            raise ConfigurationError(
                f"need {self.n_modes} coefficients, got shape {self.coeffs.shape}")
        if self.n_modes > 0:
            self.basis, self.basis_x = fourier_basis(self.grid, self.n_modes)
        else:
            self.basis = np.zeros((0, self.grid.n))
            self.basis_x = np.zeros((0, self.grid.n))


def make_noise_model(g: Grid1D, n_modes: int, master_seed: int,
                     profile: str = "flat", decay: float = 1.0,
                     amplitude: float = 1.0) -> NoiseModel:
    return NoiseModel(grid=g, n_modes=n_modes,
                      coeffs=coefficient_profile(n_modes, profile, decay, amplitude),
                      master_seed=master_seed)


def derive_seed(master_seed: int, tag: int, index: int) -> int:
    """Derived stream seed: master combined with a purpose tag and an index.

    Realized through SeedSequence spawn keys so distinct (tag, index) pairs
    give independent, reproducible streams.
    """
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(tag, index))
    return int(ss.generate_state(1, np.uint64)[0])


# purpose tags for derive_seed
TAG_PATH = 1
TAG_TEST_DATA = 2


def sample_increments(nm: NoiseModel, dt: float, step_index: int) -> np.ndarray:
    """Brownian increments delta beta^i_l ~ N(0, dt), shape (3, n_modes).

    A pure function of (master_seed, step_index): each step owns an
    independent substream keyed by its index.
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    ss = np.random.SeedSequence(entropy=nm.master_seed, spawn_key=(step_index,))
    rng = np.random.default_rng(ss)
    return np.sqrt(dt) * rng.standard_normal((3, nm.n_modes))


def noise_fields(nm: NoiseModel, increments: np.ndarray) -> NoiseIncrement:
    """Assemble dW^i(x) = sum_l c_l sigma_l(x) dbeta^i_l and the x-derivatives."""
    w = nm.coeffs[None, :] * increments          # (3, L)
    dW = w @ nm.basis                            # (3, n)
    dxW = w[:2] @ nm.basis_x                     # (2, n)
    return NoiseIncrement(dW1=dW[0], dW2=dW[1], dW3=dW[2],
                          dxW1=dxW[0], dxW2=dxW[1])
