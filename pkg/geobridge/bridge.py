"""
Chain time indexing, the segment sigma schedule and Euler-Maruyama simulation of the
Brownian bridge SDE ``dR = (z1 - R) / (T - t) dt + sigma dW``.
"""
import math
from logging import getLogger
from typing import Optional

import numpy as np

from .bridge_config import BridgeConfig
from .bridge_schedule import BridgeSchedule, SegmentTime
from .errors import InputError, SegmentIndexError, StateError, TimeRangeError
from .geometric_state import Coords
from .kernels import project_noise


__all__ = ["segment_index", "sigma_for_segment", "segment_config", "simulate_bridge_sde"]


logger = getLogger(__name__)


def segment_index(t: float, sched: BridgeSchedule) -> SegmentTime:
    """
    Splits a chain time into ``(i, t')`` with ``i = floor(t / T)`` and ``t' = t - i T``.

    :param t: Global time in ``[0, N T)``.
    :type t: float
    :param sched: Chain schedule.
    :type sched: BridgeSchedule
    :rtype: SegmentTime
    :raises TimeRangeError: If ``t`` lies outside ``[0, N T)``.
    """
    if not 0 <= t < sched.total_time:
        raise TimeRangeError(f"t={t} outside [0, {sched.total_time})")
    # floor may round up to N for t just below N T
    i = min(int(math.floor(t / sched.T)), sched.N - 1)
    return SegmentTime(i=i, t_local=t - i * sched.T)


def sigma_for_segment(i: int, sched: BridgeSchedule) -> float:
    """
    Diffusion coefficient ``sigma_i = ((N - i) / N) sigma`` of segment ``i``.

    :raises SegmentIndexError: If ``i`` lies outside ``[0, N-1]``.
    """
    if not 0 <= i < sched.N:
        raise SegmentIndexError(f"segment {i} outside [0, {sched.N - 1}]")
    return (sched.N - i) / sched.N * sched.sigma


def segment_config(i: int, sched: BridgeSchedule) -> BridgeConfig:
    """Bridge parameters ``(sigma_i, T)`` of segment ``i``."""
    return BridgeConfig(sigma=sigma_for_segment(i, sched), T=sched.T)


# pylint: disable=too-many-arguments,too-many-positional-arguments
def simulate_bridge_sde(z0: Coords,
                        z1: Coords,
                        cfg: BridgeConfig,
                        steps: int,
                        rng: Optional[np.random.Generator] = None,
                        *,
                        sigma: Optional[float] = None,
                        increments: Optional[np.ndarray] = None,
                        record_stride: int = 1) -> list[Coords]:
    """
    Simulates the Brownian bridge from ``z0`` to ``z1`` with Euler-Maruyama.

    The step is ``T / steps`` and the drift is evaluated at the left end of each step,
    so the last evaluation happens at ``T - T/steps`` and never divides by zero. Noise
    increments are projected to the CoM-free subspace (except for single atoms).

    :param z0: Start coordinates, shape ``(..., n, 3)``; leading axes are independent
        paths.
    :param z1: Pinned end coordinates, same shape as ``z0``.
    :param cfg: Bridge parameters; ``cfg.sigma`` is the noise level unless ``sigma``
        overrides it.
    :type cfg: BridgeConfig
    :param steps: Number of Euler steps, ``>= 1``.
    :type steps: int
    :param rng: Random stream for the increments; unused when ``increments`` is given.
    :type rng: Optional[numpy.random.Generator]
    :param sigma: Noise level override; ``0`` gives the deterministic drift ODE.
    :type sigma: Optional[float]
    :param increments: Pre-drawn standard normal increments, shape
        ``(steps,) + z0.shape``. Rotating these rotates the path.
    :type increments: Optional[numpy.ndarray]
    :param record_stride: Keep every ``record_stride``-th state (and the last one).
    :type record_stride: int
    :return: Recorded states, starting with ``z0``; ``steps + 1`` of them for stride 1.
    :rtype: list[numpy.ndarray]
    :raises InputError: If neither ``rng`` nor ``increments`` is given.
    :raises StateError: If ``increments`` has the wrong shape.
    """
    if steps < 1:
        raise TimeRangeError(f"steps must be >= 1, got {steps}")
    noise_level = cfg.sigma if sigma is None else sigma
    x = np.array(z0, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    if increments is None:
        if rng is None:
            raise InputError("either rng or increments is required")
        increments = rng.standard_normal((steps,) + x.shape)
    elif increments.shape != (steps,) + x.shape:
        raise StateError(f"increments must have shape {(steps,) + x.shape}")

    dt = cfg.T / steps
    noise_scale = noise_level * math.sqrt(dt)
    path = [x.copy()]
    for k in range(steps):
        t_k = k * dt
        drift = (z1 - x) / (cfg.T - t_k)
        x = x + drift * dt + noise_scale * project_noise(increments[k])
        if (k + 1) % record_stride == 0 or k + 1 == steps:
            path.append(x.copy())
    logger.debug("bridge SDE: %d steps, sigma=%s, recorded %d states",
                 steps, noise_level, len(path))
    return path
