"""
Closed-form references for checking the bridge machinery.

- Ornstein-Uhlenbeck (OU) transitions ``dX = -theta X dt + sigma dW``.
- The OU bridge drift, the Doob transform pinning an OU path to ``z1`` at ``T``.
- Euler-Maruyama simulation of the prior SDE ``dR = -grad V dt + sigma dW``.
- A Girsanov estimate of ``KL(OU bridge || Brownian bridge)`` per chain segment, which
  shrinks as the chain gets finer.
"""
import math
from dataclasses import dataclass
from logging import getLogger
from typing import Optional

import numpy as np
from typeguard import typechecked

from .errors import ConfigError, DivergenceError, InputError, StateError, TimeRangeError
from .geometric_state import Coords
from .kernels import project_noise
from .potentials import PotentialSpec, potential_gradient


__all__ = ["OUSpec",
           "KLStudyConfig",
           "KLRow",
           "ou_transition",
           "ou_bridge_drift",
           "simulate_prior_sde",
           "girsanov_kl_study"]


logger = getLogger(__name__)

_THETA_EPS = 1e-10


@dataclass(frozen=True)
class OUSpec:
    """
    :ivar theta: Mean-reversion rate, ``>= 0``.
    :ivar sigma: Diffusion coefficient, ``> 0``.
    """
    theta: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.theta < 0:
            raise ConfigError(f"theta must be >= 0, got {self.theta}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class KLStudyConfig:
    """
    :ivar segment_counts: Chain lengths ``N`` to evaluate, strictly increasing.
    :ivar paths_per_estimate: Monte Carlo paths per segment.
    :ivar euler_steps: Euler steps per segment.
    :ivar total_time: Length of the time interval split into ``N`` segments.
    """
    segment_counts: tuple[int, ...] = (1, 2, 4, 8, 16)
    paths_per_estimate: int = 2000
    euler_steps: int = 200
    total_time: float = 1.0

    def __post_init__(self):
        counts = tuple(self.segment_counts)
        if not counts or counts[0] < 1 or any(b <= a for a, b in zip(counts, counts[1:])):
            raise ConfigError("segment_counts must be strictly increasing and >= 1")
        if self.paths_per_estimate < 2:
            raise ConfigError("paths_per_estimate must be >= 2")
        if self.euler_steps < 1:
            raise ConfigError("euler_steps must be >= 1")
        if not self.total_time > 0:
            raise ConfigError("total_time must be > 0")
        object.__setattr__(self, "segment_counts", counts)


@dataclass(frozen=True)
class KLRow:
    """
    One line of the KL study.

    :ivar N: Segment count.
    :ivar mean_kl: KL averaged over segments and paths.
    :ivar stderr: Standard error of ``mean_kl`` over paths.
    :ivar max_kl: Largest per-segment mean.
    """
    N: int  # pylint: disable=invalid-name
    mean_kl: float
    stderr: float
    max_kl: float


def _ou_variance(dt, spec: OUSpec):
    if spec.theta < _THETA_EPS:
        return spec.sigma ** 2 * dt
    return spec.sigma ** 2 * (-np.expm1(-2 * spec.theta * dt)) / (2 * spec.theta)


def ou_transition(z: Coords, dt: float, spec: OUSpec) -> tuple[Coords, float]:
    """
    Mean and per-coordinate variance of the OU transition over ``dt``.

    ``mean = exp(-theta dt) z``, ``var = sigma^2 (1 - exp(-2 theta dt)) / (2 theta)``,
    and ``var = sigma^2 dt`` when ``theta < 1e-10``.

    :raises TimeRangeError: If ``dt < 0``.
    """
    if dt < 0:
        raise TimeRangeError(f"dt must be >= 0, got {dt}")
    mean = math.exp(-spec.theta * dt) * np.asarray(z, dtype=np.float64)
    return mean, float(_ou_variance(dt, spec))


def ou_bridge_drift(x: Coords, t, z1: Coords, T: float, spec: OUSpec) -> Coords:
    """
    Drift of the OU process conditioned to hit ``z1`` at time ``T``:
    ``-theta x + sigma^2 d/dx log p_OU(z1, T | x, t)``.

    ``t`` may be an array broadcastable against ``x``.

    :raises TimeRangeError: If any ``t >= T``.
    """
    if np.any(np.asarray(t) >= T):
        raise TimeRangeError(f"OU bridge drift is singular for t >= T={T}")
    remaining = T - np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    decay = np.exp(-spec.theta * remaining)
    score = decay * (np.asarray(z1) - decay * x) / _ou_variance(remaining, spec)
    return -spec.theta * x + spec.sigma ** 2 * score


# pylint: disable=too-many-arguments,too-many-positional-arguments
def _euler_prior(potential: PotentialSpec, z0: np.ndarray, sigma: float, dt: float,
                 increments: np.ndarray, record_stride: int) -> list[np.ndarray]:
    x = np.array(z0, dtype=np.float64)
    path = [x.copy()]
    noise_scale = sigma * math.sqrt(dt)
    n_steps = increments.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            x = x - potential_gradient(potential, x) * dt \
                + noise_scale * project_noise(increments[k])
            if (k + 1) % record_stride == 0 or k + 1 == n_steps:
                path.append(x.copy())
    return path


def simulate_prior_sde(potential: PotentialSpec,
                       z0: Coords,
                       sigma: float,
                       dt: float,
                       n_steps: int,
                       rng: Optional[np.random.Generator] = None,
                       *,
                       increments: Optional[np.ndarray] = None,
                       record_stride: int = 1,
                       check_finite: bool = True) -> list[Coords]:
    """
    Euler-Maruyama path of ``dR = -grad V(R) dt + sigma dW`` with CoM-free noise.

    :param potential: Potential ``V``.
    :type potential: PotentialSpec
    :param z0: Start coordinates ``(..., n, 3)``.
    :param sigma: Noise level, ``>= 0``.
    :param dt: Time step, ``> 0``.
    :param n_steps: Number of steps.
    :param rng: Random stream; unused when ``increments`` is given.
    :param increments: Pre-drawn standard normal increments ``(n_steps,) + z0.shape``.
    :param record_stride: Keep every ``record_stride``-th state and the last one.
    :param check_finite: Raise on non-finite states; batched callers that filter
        diverged rows themselves pass ``False``.
    :return: Recorded states starting with ``z0``; ``n_steps + 1`` for stride 1.
    :rtype: list[numpy.ndarray]
    :raises DivergenceError: If the state becomes non-finite and ``check_finite`` is set.
    :raises InputError: If neither ``rng`` nor ``increments`` is given.
    :raises StateError: If ``increments`` has the wrong shape.
    """
    if not dt > 0:
        raise TimeRangeError(f"dt must be > 0, got {dt}")
    z0 = np.asarray(z0, dtype=np.float64)
    if increments is None:
        if rng is None:
            raise InputError("either rng or increments is required")
        increments = rng.standard_normal((n_steps,) + z0.shape)
    elif increments.shape != (n_steps,) + z0.shape:
        raise StateError(f"increments must have shape {(n_steps,) + z0.shape}")
    path = _euler_prior(potential, z0, sigma, dt, increments, record_stride)
    if not check_finite:
        return path
    for index, state in enumerate(path):
        if not np.all(np.isfinite(state)):
            raise DivergenceError("prior SDE produced a non-finite state",
                                  step=index * record_stride)
    return path


def _segment_kl(x_start: np.ndarray, x_end: np.ndarray, tau: float, spec: OUSpec,
                steps: int, rng: np.random.Generator) -> np.ndarray:
    """Per-path Girsanov KL of one segment, paths drawn from the OU bridge."""
    dt = tau / steps
    x = x_start.copy()
    kl = np.zeros(x.shape[0])
    for k in range(steps):
        t = k * dt
        drift_ou = ou_bridge_drift(x, t, x_end, tau, spec)
        drift_bb = (x_end - x) / (tau - t)
        gap = drift_ou - drift_bb
        kl += np.sum(gap * gap, axis=-1) / (2 * spec.sigma ** 2) * dt
        x = x + drift_ou * dt + spec.sigma * math.sqrt(dt) * rng.standard_normal(x.shape)
    return kl


@typechecked
def girsanov_kl_study(spec: OUSpec, cfg: KLStudyConfig,
                      rng: np.random.Generator) -> list[KLRow]:
    """
    Estimates, for each segment count ``N``, the KL divergence between the OU bridge
    and the Brownian bridge on every segment of ``[0, total_time]``.

    Endpoints come from exact OU transitions started in the stationary law (the origin
    when ``theta = 0``). On each segment the KL is the time integral of the squared
    drift difference over ``2 sigma^2``, accumulated along Euler paths of the OU bridge.

    :param spec: OU prior.
    :type spec: OUSpec
    :param cfg: Study settings.
    :type cfg: KLStudyConfig
    :param rng: Random stream.
    :type rng: numpy.random.Generator
    :return: One row per segment count, in the order of ``cfg.segment_counts``.
    :rtype: list[KLRow]
    """
    if spec.theta < _THETA_EPS:
        logger.warning("theta=%s: OU and Brownian bridges coincide, KL is zero", spec.theta)
    paths = cfg.paths_per_estimate
    rows = []
    for n_segments in cfg.segment_counts:
        tau = cfg.total_time / n_segments
        if spec.theta < _THETA_EPS:
            x = np.zeros((paths, 3))
        else:
            x = math.sqrt(spec.sigma ** 2 / (2 * spec.theta)) * rng.standard_normal((paths, 3))
        per_path = np.zeros((n_segments, paths))
        for segment in range(n_segments):
            mean, var = ou_transition(x, tau, spec)
            x_end = mean + math.sqrt(var) * rng.standard_normal(x.shape)
            per_path[segment] = _segment_kl(x, x_end, tau, spec, cfg.euler_steps, rng)
            x = x_end
        path_means = per_path.mean(axis=0)
        row = KLRow(N=n_segments,
                    mean_kl=float(path_means.mean()),
                    stderr=float(path_means.std(ddof=1) / math.sqrt(paths)),
                    max_kl=float(per_path.mean(axis=1).max()))
        logger.debug("KL study N=%d: %s", n_segments, row)
        rows.append(row)
    return rows
