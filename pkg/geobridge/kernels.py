"""
Gaussian prior transition kernels and the closed-form quantities of the Brownian
bridge built on them.

The prior is ``dR = sigma dW`` restricted to CoM-free coordinates. Its transition
density is isotropic Gaussian, the bridge pinned at ``z0`` and ``z1`` has Gaussian
marginals, and the Doob h-transform target is a linear field. A 1-D grid
implementation of the general h-transform is included as a numerical oracle.

Log-densities are used throughout; 3n-dimensional densities underflow.
"""
from dataclasses import dataclass
from logging import getLogger

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import logsumexp
from scipy.stats import norm

from .bridge_config import BridgeConfig
from .errors import ConfigError, InputError, StateError, TimeRangeError
from .geom import project_com_free_coords
from .geometric_state import Coords


__all__ = ["PriorKernel",
           "BridgeMarginal",
           "prior_log_density",
           "bridge_score_target",
           "bridge_marginal",
           "smoothed_marginal",
           "com_free_noise",
           "project_noise",
           "sample_com_free_gaussian",
           "noised_bridge_sample",
           "h_transform_grid",
           "default_grid"]


logger = getLogger(__name__)

# rows of the (grid x grid) kernel evaluated at once by h_transform_grid
_GRID_CHUNK = 256


@dataclass(frozen=True)
class PriorKernel:
    """
    Transition kernel ``p(z', t' | z, t) = N(z'; z, sigma^2 (t' - t) I)``.

    :ivar sigma: Diffusion coefficient.
    :type sigma: float
    """
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True, eq=False)
class BridgeMarginal:
    """
    Isotropic Gaussian marginal of the bridge at one time.

    :ivar mean: Mean coordinates, same shape as the endpoints.
    :type mean: numpy.ndarray
    :ivar std: Standard deviation per coordinate; broadcastable against ``mean``.
    :type std: numpy.ndarray | float
    """
    mean: Coords
    std: np.ndarray | float


def prior_log_density(kernel: PriorKernel,
                      z_to: Coords,
                      t_to: float,
                      z_from: Coords,
                      t_from: float) -> float:
    """
    Log of ``N(z_to; z_from, sigma^2 (t_to - t_from) I)`` over all ``3n`` coordinates.

    :param kernel: Prior kernel.
    :type kernel: PriorKernel
    :param z_to: Later coordinates.
    :param t_to: Later time.
    :param z_from: Earlier coordinates.
    :param t_from: Earlier time.
    :rtype: float
    :raises TimeRangeError: If ``t_to <= t_from``.
    :raises StateError: If the coordinate shapes differ.
    """
    if not t_to > t_from:
        raise TimeRangeError(f"t_to ({t_to}) must be later than t_from ({t_from})")
    z_to = np.asarray(z_to, dtype=np.float64)
    z_from = np.asarray(z_from, dtype=np.float64)
    if z_to.shape != z_from.shape:
        raise StateError(f"shape mismatch {z_to.shape} vs {z_from.shape}")
    scale = kernel.sigma * np.sqrt(t_to - t_from)
    return float(np.sum(norm.logpdf(z_to - z_from, scale=scale)))


def bridge_score_target(r_t: Coords, z1: Coords, t: float, cfg: BridgeConfig) -> Coords:
    """
    The matching target ``grad log p(z1, T | r_t, t) = (z1 - r_t) / (sigma^2 (T - t))``.

    :param r_t: Current coordinates.
    :param z1: Terminal coordinates.
    :param t: Current time, ``0 <= t < T``.
    :param cfg: Bridge parameters.
    :type cfg: BridgeConfig
    :rtype: numpy.ndarray
    :raises TimeRangeError: If ``t >= T`` (singular target) or ``t < 0``.
    """
    if t >= cfg.T:
        raise TimeRangeError(f"score target is singular at t={t} >= T={cfg.T}")
    if t < 0:
        raise TimeRangeError(f"t must be >= 0, got {t}")
    return (np.asarray(z1) - np.asarray(r_t)) / (cfg.sigma ** 2 * (cfg.T - t))


def _check_time(t, T: float):
    if np.any(np.asarray(t) < 0) or np.any(np.asarray(t) > T):
        raise TimeRangeError(f"t must lie in [0, {T}]")


def bridge_marginal(z0: Coords, z1: Coords, t: float, cfg: BridgeConfig) -> BridgeMarginal:
    """
    Marginal of the Brownian bridge from ``z0`` (time 0) to ``z1`` (time T).

    Mean ``(t/T) z1 + ((T-t)/T) z0``, standard deviation ``sigma sqrt(t (T-t)) / T``.
    ``t`` may be an array broadcastable against the coordinates, e.g. shape
    ``(batch, 1, 1)``.

    :rtype: BridgeMarginal
    :raises TimeRangeError: If ``t`` lies outside ``[0, T]``.
    """
    _check_time(t, cfg.T)
    t = np.asarray(t, dtype=np.float64)
    T = cfg.T
    mean = (t / T) * np.asarray(z1, dtype=np.float64) \
        + ((T - t) / T) * np.asarray(z0, dtype=np.float64)
    std = cfg.sigma * np.sqrt(t * (T - t)) / T
    return BridgeMarginal(mean=mean, std=std if std.ndim else float(std))


def smoothed_marginal(z0: Coords, z1: Coords, t: float, cfg: BridgeConfig) -> BridgeMarginal:
    """
    Marginal of the bridge started from the smoothed law ``N(z0, sigma^2 I)``.

    Mean as in :func:`bridge_marginal`, standard deviation ``sigma sqrt((T-t)/T)``.

    :rtype: BridgeMarginal
    """
    _check_time(t, cfg.T)
    t = np.asarray(t, dtype=np.float64)
    T = cfg.T
    mean = (t / T) * np.asarray(z1, dtype=np.float64) \
        + ((T - t) / T) * np.asarray(z0, dtype=np.float64)
    std = cfg.sigma * np.sqrt((T - t) / T)
    return BridgeMarginal(mean=mean, std=std if std.ndim else float(std))


def com_free_noise(shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """
    Standard normal noise of shape ``(..., n, 3)`` projected to the CoM-free subspace.

    Single-atom systems keep plain isotropic noise; the projection would remove it all.
    """
    eps = rng.standard_normal(shape)
    return project_noise(eps)


def project_noise(eps: np.ndarray) -> np.ndarray:
    """CoM-free projection of noise; a no-op when there is only one atom."""
    if eps.shape[-2] == 1:
        return eps
    return project_com_free_coords(eps)


def sample_com_free_gaussian(mean: Coords, std, rng: np.random.Generator) -> Coords:
    """
    Draws ``mean + std * eps'`` with ``eps'`` the CoM-free projection of i.i.d.
    standard normal noise.

    :param mean: Mean coordinates, shape ``(..., n, 3)``.
    :param std: Non-negative standard deviation, scalar or broadcastable array.
    :param rng: Random stream.
    :type rng: numpy.random.Generator
    :rtype: numpy.ndarray
    """
    mean = np.asarray(mean, dtype=np.float64)
    if np.any(np.asarray(std) < 0):
        raise InputError("std must be non-negative")
    return mean + std * com_free_noise(mean.shape, rng)


def noised_bridge_sample(z0: Coords,
                         z1: Coords,
                         t: float,
                         cfg: BridgeConfig,
                         rng: np.random.Generator) -> Coords:
    """
    One draw of ``R^t`` from the bridge marginal, with CoM-free noise.

    At ``t = 0`` and ``t = T`` the result equals ``z0`` and ``z1`` exactly.

    :rtype: numpy.ndarray
    """
    marginal = bridge_marginal(z0, z1, t, cfg)
    return sample_com_free_gaussian(marginal.mean, marginal.std, rng)


def default_grid(center: float, sigma: float, T: float = 1.0, points: int = 4001,
                 extent: float = 8.0, margin: float = 0.0) -> np.ndarray:
    """
    Uniform 1-D grid spanning ``center +- (extent sigma sqrt(T) + margin)``.

    :rtype: numpy.ndarray
    """
    half = extent * sigma * np.sqrt(T) + margin
    return np.linspace(center - half, center + half, points)


def _trapezoid_log_weights(grid: np.ndarray) -> np.ndarray:
    steps = np.diff(grid)
    weights = np.zeros_like(grid)
    weights[:-1] += steps / 2
    weights[1:] += steps / 2
    return np.log(weights)


def h_transform_grid(prior: PriorKernel,
                     data_conditional: np.ndarray,
                     z0: float,
                     t: float,
                     grid: np.ndarray,
                     T: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """
    Numerically evaluates the 1-D h-function of the data-matching bridge

    ``h(z, t; z0) = int p(z', T | z, t) q(z' | z0) / p(z', T | z0, 0) dz'``

    at every grid point with the trapezoid rule (in log space), and its log-gradient
    by central differences on the grid.

    :param prior: Prior kernel.
    :type prior: PriorKernel
    :param data_conditional: Values of the target density ``q(z' | z0)`` on ``grid``.
    :type data_conditional: numpy.ndarray
    :param z0: Start point.
    :type z0: float
    :param t: Evaluation time, ``0 <= t < T``.
    :type t: float
    :param grid: Sorted, strictly increasing 1-D grid covering ``z0 +- 8 sigma sqrt(T)``.
    :type grid: numpy.ndarray
    :param T: Bridge duration.
    :type T: float
    :return: ``(h, d/dz log h)`` on the grid.
    :rtype: tuple[numpy.ndarray, numpy.ndarray]
    :raises InputError: On an unsorted or too narrow grid, or an unnormalised density.
    :raises TimeRangeError: If ``t`` lies outside ``[0, T)``.
    """
    grid = np.asarray(grid, dtype=np.float64)
    density = np.asarray(data_conditional, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise InputError("grid must be 1-D and strictly increasing")
    if density.shape != grid.shape:
        raise InputError("density and grid must have the same shape")
    reach = 8.0 * prior.sigma * np.sqrt(T)
    if grid[0] > z0 - reach or grid[-1] < z0 + reach:
        raise InputError(f"grid must cover z0 +- {reach}")
    if np.any(density < 0):
        raise InputError("density must be non-negative")
    mass = trapezoid(density, grid)
    if abs(mass - 1.0) > 1e-3:
        raise InputError(f"density integrates to {mass} on the grid, not 1")
    if not 0 <= t < T:
        raise TimeRangeError(f"t must lie in [0, {T}), got {t}")

    with np.errstate(divide="ignore"):
        log_q = np.log(density)
    log_ratio = log_q - norm.logpdf(grid, loc=z0, scale=prior.sigma * np.sqrt(T))
    log_terms = log_ratio + _trapezoid_log_weights(grid)
    scale = prior.sigma * np.sqrt(T - t)

    log_h = np.empty_like(grid)
    for start in range(0, grid.size, _GRID_CHUNK):
        z = grid[start:start + _GRID_CHUNK, None]
        log_kernel = norm.logpdf(grid[None, :], loc=z, scale=scale)
        log_h[start:start + _GRID_CHUNK] = logsumexp(log_kernel + log_terms[None, :], axis=1)

    logger.debug("h-transform grid: %d points, t=%s, mass=%s", grid.size, t, mass)
    return np.exp(log_h), np.gradient(log_h, grid)
