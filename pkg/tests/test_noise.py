import numpy as np
import pytest

from hasimoto_lab.fields import ConfigurationError, line_grid, periodic_grid
from hasimoto_lab.noise import (NoiseModel, coefficient_profile, derive_seed,
                                fourier_basis, make_noise_model, noise_fields,
                                sample_increments)


def test_basis_orthonormal():
    g = periodic_grid(2.0 * np.pi, 256)
    basis, _ = fourier_basis(g, 7)
    gram = g.h * basis @ basis.T
    # trapezoid quadrature is exact for trig products below the Nyquist mode
    assert np.max(np.abs(gram - np.eye(7))) <= 1e-12


def test_basis_derivatives():
    g = periodic_grid(4.0, 128)
    basis, basis_x = fourier_basis(g, 5)
    k = 2.0 * np.pi / 4.0
    amp = np.sqrt(2.0 / 4.0)
    assert np.max(np.abs(basis_x[0])) == 0.0
    assert np.allclose(basis_x[1], -amp * k * np.sin(k * g.x))
    assert np.allclose(basis_x[2], amp * k * np.cos(k * g.x))


def test_basis_requires_periodic_grid():
    with pytest.raises(ConfigurationError):
        fourier_basis(line_grid(0.0, 1.0, 16), 3)


def test_coefficient_profiles():
    assert np.allclose(coefficient_profile(4, "flat"), 1.0)
    assert np.allclose(coefficient_profile(3, "power", 2.0),
                       [1.0, 0.25, 1.0 / 9.0])
    assert np.allclose(coefficient_profile(2, "flat", amplitude=0.3), 0.3)
    with pytest.raises(ConfigurationError):
        coefficient_profile(3, "exp")


def test_model_validation():
    g = periodic_grid(2.0 * np.pi, 32)
    with pytest.raises(ConfigurationError):
        NoiseModel(grid=g, n_modes=2, coeffs=np.ones(3), master_seed=0)
    nm = make_noise_model(g, 0, 0)
    inc = noise_fields(nm, sample_increments(nm, 0.1, 0))
    assert np.max(np.abs(inc.dW1)) == 0.0
    assert np.max(np.abs(inc.dW3)) == 0.0


def test_increment_variance():
    g = periodic_grid(2.0 * np.pi, 16)
    nm = make_noise_model(g, 3, 42)
    dt = 0.25
    draws = np.stack([sample_increments(nm, dt, k) for k in range(11000)])
    var = np.var(draws)
    assert dt * 0.99 <= var <= dt * 1.01
    with pytest.raises(ConfigurationError):
        sample_increments(nm, 0.0, 0)


def test_determinism_and_step_independence():
    g = periodic_grid(2.0 * np.pi, 32)
    nm1 = make_noise_model(g, 4, 7)
    nm2 = make_noise_model(g, 4, 7)
    a = sample_increments(nm1, 0.01, 5)
    b = sample_increments(nm2, 0.01, 5)
    assert np.array_equal(a, b)
    c = sample_increments(nm1, 0.01, 6)
    assert not np.array_equal(a, c)


def test_single_constant_mode_field():
    # one constant mode: dW^1(x) = c_1 dbeta / sqrt(length), no x dependence
    length = 2.0 * np.pi
    g = periodic_grid(length, 64)
    nm = make_noise_model(g, 1, 3, amplitude=0.5)
    inc = noise_fields(nm, sample_increments(nm, 0.01, 0))
    assert np.max(inc.dW1) == np.min(inc.dW1)
    assert np.max(np.abs(inc.dxW1)) == 0.0
    draws = np.array([
        noise_fields(nm, sample_increments(nm, 0.01, k)).dW1[0]
        for k in range(20000)])
    target = 0.5 ** 2 * 0.01 / length
    assert abs(np.var(draws) - target) <= 0.05 * target


def test_derive_seed_distinct():
    seeds = {derive_seed(9, tag, idx) for tag in range(3) for idx in range(5)}
    assert len(seeds) == 15
    assert derive_seed(9, 1, 2) == derive_seed(9, 1, 2)
