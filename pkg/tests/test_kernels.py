# pylint: skip-file
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.stats import norm

from geobridge import BridgeConfig, RigidMotion
from geobridge.errors import ConfigError, InputError, StateError, TimeRangeError
from geobridge.kernels import (PriorKernel, bridge_marginal, bridge_score_target,
                               com_free_noise, default_grid, h_transform_grid,
                               noised_bridge_sample, prior_log_density,
                               sample_com_free_gaussian, smoothed_marginal)


def test_prior_kernel_validation():
    with pytest.raises(ConfigError):
        PriorKernel(sigma=0.0)


def test_prior_log_density_values():
    z = np.array([[0.3, -1.0, 2.0]])
    value = prior_log_density(PriorKernel(1.0), z, 1.0, z, 0.0)
    assert value == pytest.approx(-1.5 * math.log(2 * math.pi), abs=1e-12)
    assert value == pytest.approx(-2.756815, abs=1e-6)
    doubled = prior_log_density(PriorKernel(2.0), z, 1.0, z, 0.0)
    assert doubled == pytest.approx(value - 3 * math.log(2), abs=1e-12)


def test_prior_log_density_errors(rng):
    z = rng.normal(size=(3, 3))
    with pytest.raises(TimeRangeError):
        prior_log_density(PriorKernel(1.0), z, 0.5, z, 0.5)
    with pytest.raises(StateError):
        prior_log_density(PriorKernel(1.0), z, 1.0, z[:2], 0.0)


def test_prior_log_density_invariances(rng):
    kernel = PriorKernel(0.7)
    z_from = rng.normal(size=(5, 3))
    z_to = rng.normal(size=(5, 3))
    base = prior_log_density(kernel, z_to, 0.9, z_from, 0.2)
    shift = rng.normal(size=3)
    assert prior_log_density(kernel, z_to + shift, 0.9, z_from + shift, 0.2) == \
        pytest.approx(base, abs=1e-12)
    motion = RigidMotion.random(rng)
    moved = prior_log_density(kernel, motion.apply(z_to), 0.9, motion.apply(z_from), 0.2)
    assert moved == pytest.approx(base, abs=1e-10)


def test_bridge_score_target_examples():
    z1 = np.array([[1.0, 0.0, 0.0]])
    r_t = np.zeros((1, 3))
    assert np.allclose(bridge_score_target(z1, z1, 0.3, BridgeConfig(1.0)), 0.0)
    assert np.allclose(bridge_score_target(r_t, z1, 0.5, BridgeConfig(1.0)), [[2.0, 0.0, 0.0]])
    assert np.allclose(bridge_score_target(r_t, z1, 0.5, BridgeConfig(2.0)), [[0.5, 0.0, 0.0]])
    with pytest.raises(TimeRangeError):
        bridge_score_target(r_t, z1, 1.0, BridgeConfig(1.0))


def test_bridge_score_target_is_gradient_of_log_density(rng):
    cfg = BridgeConfig(sigma=0.8, T=1.0)
    kernel = PriorKernel(cfg.sigma)
    z1 = rng.normal(size=(3, 3))
    r_t = rng.normal(size=(3, 3))
    t = 0.35
    target = bridge_score_target(r_t, z1, t, cfg)
    h = 1e-5
    numeric = np.zeros_like(r_t)
    for index in np.ndindex(r_t.shape):
        up, down = r_t.copy(), r_t.copy()
        up[index] += h
        down[index] -= h
        numeric[index] = (prior_log_density(kernel, z1, cfg.T, up, t)
                          - prior_log_density(kernel, z1, cfg.T, down, t)) / (2 * h)
    assert np.linalg.norm(numeric - target) <= 1e-6 * np.linalg.norm(target)


def test_bridge_marginal_examples(rng):
    z0 = rng.normal(size=(4, 3))
    z1 = rng.normal(size=(4, 3))
    cfg = BridgeConfig(sigma=1.0, T=1.0)
    start = bridge_marginal(z0, z1, 0.0, cfg)
    assert np.array_equal(start.mean, z0) and start.std == 0.0
    end = bridge_marginal(z0, z1, 1.0, cfg)
    assert np.array_equal(end.mean, z1) and end.std == 0.0
    middle = bridge_marginal(z0, z1, 0.5, cfg)
    assert np.allclose(middle.mean, (z0 + z1) / 2)
    assert middle.std == pytest.approx(0.5)
    with pytest.raises(TimeRangeError):
        bridge_marginal(z0, z1, 1.5, cfg)


def test_bridge_marginal_mean_is_linear(rng):
    z0 = rng.normal(size=(2, 3))
    z1 = rng.normal(size=(2, 3))
    cfg = BridgeConfig(sigma=0.5, T=2.0)
    slope = (bridge_marginal(z0, z1, 0.4, cfg).mean - z0) / 0.4
    for t in (0.1, 0.9, 1.7):
        assert np.allclose((bridge_marginal(z0, z1, t, cfg).mean - z0) / t, slope, atol=1e-12)


def test_bridge_marginal_accepts_time_arrays(rng):
    z0 = rng.normal(size=(3, 2, 3))
    z1 = rng.normal(size=(3, 2, 3))
    t = np.array([0.1, 0.5, 0.9])[:, None, None]
    marginal = bridge_marginal(z0, z1, t, BridgeConfig(1.0))
    assert marginal.std.shape == (3, 1, 1)
    assert marginal.std[1, 0, 0] == pytest.approx(0.5)


def test_smoothed_marginal():
    z0 = np.zeros((1, 3))
    z1 = np.ones((1, 3))
    cfg = BridgeConfig(sigma=0.5, T=1.0)
    start = smoothed_marginal(z0, z1, 0.0, cfg)
    assert start.std == pytest.approx(0.5)
    assert np.allclose(smoothed_marginal(z0, z1, 0.75, cfg).mean, 0.75)
    assert smoothed_marginal(z0, z1, 0.75, cfg).std == pytest.approx(0.25)
    assert smoothed_marginal(z0, z1, 1.0, cfg).std == 0.0


def test_sample_com_free_gaussian(rng):
    mean = rng.normal(size=(5, 3))
    assert np.array_equal(sample_com_free_gaussian(mean, 0.0, rng), mean)
    draw = sample_com_free_gaussian(mean, 2.0, rng)
    assert np.allclose((draw - mean).sum(axis=0), 0.0, atol=1e-12)


@pytest.mark.slow
def test_com_free_noise_covariance(rng):
    n = 4
    noise = com_free_noise((100_000, n, 3), rng).reshape(100_000, -1)
    expected = np.kron(np.eye(n) - np.ones((n, n)) / n, np.eye(3))
    assert np.max(np.abs(np.cov(noise, rowvar=False) - expected)) < 0.02


def test_single_atom_noise_is_not_projected(rng):
    noise = com_free_noise((1000, 1, 3), rng)
    assert np.std(noise) == pytest.approx(1.0, abs=0.05)


def test_noised_bridge_sample_endpoints(rng):
    z0 = rng.normal(size=(3, 3))
    z1 = rng.normal(size=(3, 3))
    cfg = BridgeConfig(sigma=1.0)
    assert np.array_equal(noised_bridge_sample(z0, z1, 0.0, cfg, rng), z0)
    assert np.array_equal(noised_bridge_sample(z0, z1, 1.0, cfg, rng), z1)


@pytest.mark.slow
def test_noised_bridge_sample_single_atom_mean(rng):
    z0 = np.array([[0.0, 0.0, 0.0]])
    z1 = np.array([[1.0, -2.0, 0.5]])
    marginal = bridge_marginal(np.broadcast_to(z0, (100_000, 1, 3)),
                               np.broadcast_to(z1, (100_000, 1, 3)), 0.5, BridgeConfig(1.0))
    draws = sample_com_free_gaussian(marginal.mean, marginal.std, rng)
    assert np.allclose(draws.mean(axis=0), (z0 + z1) / 2, atol=0.01)
    assert np.std(draws - marginal.mean) == pytest.approx(0.5, abs=0.01)


def _gaussian_grad_log_h(z, z0, mean, s, sigma, t, T=1.0):
    a = 1.0 / (sigma ** 2 * (T - t))
    b = 1.0 / s ** 2
    c = 1.0 / (sigma ** 2 * T)
    return a * (b * mean - c * z0 - (b - c) * z) / (a + b - c)


def _interior(grid, z0, sigma):
    return np.abs(grid - z0) <= 3 * sigma


def test_h_transform_identity_case():
    sigma, z0, t = 1.0, 0.2, 0.5
    grid = default_grid(z0, sigma, margin=1.0)
    q = norm.pdf(grid, loc=z0, scale=sigma)
    h, grad_log_h = h_transform_grid(PriorKernel(sigma), q, z0, t, grid)
    inside = _interior(grid, z0, sigma)
    assert np.all(h > 0)
    assert np.allclose(h[inside], 1.0, atol=5e-3)
    assert np.allclose(grad_log_h[inside], 0.0, atol=5e-3)


def test_h_transform_gaussian_target():
    sigma, z0, t = 1.0, -0.3, 0.4
    mean, s = z0 + 0.7, 0.5
    grid = default_grid(z0, sigma, margin=1.0)
    q = norm.pdf(grid, loc=mean, scale=s)
    _, grad_log_h = h_transform_grid(PriorKernel(sigma), q, z0, t, grid)
    inside = _interior(grid, z0, sigma)
    expected = _gaussian_grad_log_h(grid, z0, mean, s, sigma, t)
    assert np.allclose(grad_log_h[inside], expected[inside], atol=1e-3)


def test_h_transform_pinned_endpoint():
    sigma, z0, t, y = 1.0, 0.0, 0.5, 0.5
    grid = default_grid(z0, sigma, margin=1.0)
    q = norm.pdf(grid, loc=y, scale=0.02)
    _, grad_log_h = h_transform_grid(PriorKernel(sigma), q, z0, t, grid)
    inside = _interior(grid, z0, sigma)
    transition_score = (y - grid) / (sigma ** 2 * (1.0 - t))
    assert np.allclose(grad_log_h[inside], transition_score[inside], atol=1e-2)


def test_h_transform_doob_normalisation():
    sigma, z0, t = 0.8, 0.1, 0.3
    grid = default_grid(z0, sigma, margin=1.0)
    q = norm.pdf(grid, loc=z0 + 0.4, scale=0.6)
    h, _ = h_transform_grid(PriorKernel(sigma), q, z0, t, grid)
    h_end = q / norm.pdf(grid, loc=z0, scale=sigma)
    for index in np.flatnonzero(_interior(grid, z0, sigma))[::200]:
        kernel = norm.pdf(grid, loc=grid[index], scale=sigma * np.sqrt(1.0 - t))
        assert trapezoid(kernel * h_end / h[index], grid) == pytest.approx(1.0, abs=1e-3)


def test_h_transform_rejects_bad_input():
    grid = default_grid(0.0, 1.0)
    q = norm.pdf(grid)
    with pytest.raises(InputError):
        h_transform_grid(PriorKernel(1.0), 2 * q, 0.0, 0.5, grid)
    with pytest.raises(InputError):
        h_transform_grid(PriorKernel(1.0), q[::-1], 0.0, 0.5, grid[::-1])
    narrow = np.linspace(-2.0, 2.0, 401)
    with pytest.raises(InputError):
        h_transform_grid(PriorKernel(1.0), norm.pdf(narrow, scale=0.3), 0.0, 0.5, narrow)
    with pytest.raises(TimeRangeError):
        h_transform_grid(PriorKernel(1.0), q, 0.0, 1.0, grid)
