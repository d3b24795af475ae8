"""
Deterministic prediction of target states by Euler integration of the learned drift.

A single bridge integrates ``dR/dt = s v(R, t; z0)`` over ``[0, T]``. A chain repeats
this for ``N`` segments; segment ``i`` is conditioned on its own start state and the
model sees the global time ``i T + t'``. The factor ``s`` is ``sigma_i^2`` or 1 (see
:class:`DriftScaling`).
"""
from logging import getLogger
from typing import Protocol

import numpy as np
import torch

from .bridge import sigma_for_segment
from .bridge_schedule import BridgeSchedule
from .errors import DivergenceError
from .geometric_state import GeometricState
from .sampler_config import DriftScaling, SamplerConfig
from .score_model import as_tensor


__all__ = ["VectorField",
           "sample_bridge",
           "sample_chain",
           "sample_bridge_batch",
           "sample_chain_batch"]


logger = getLogger(__name__)


class VectorField(Protocol):  # pylint: disable=too-few-public-methods
    """Anything called like :meth:`ScoreModel.forward` on batched tensors."""
    def __call__(self, r_t: torch.Tensor, r_0: torch.Tensor,
                 features: torch.Tensor, t: torch.Tensor) -> torch.Tensor: ...


def _drift_factor(i: int, cfg: SamplerConfig) -> float:
    if cfg.drift_scaling == DriftScaling.SIGMA_SQUARED:
        return sigma_for_segment(i, cfg.sched) ** 2
    if cfg.drift_scaling == DriftScaling.LITERAL:
        return 1.0
    raise NotImplementedError(f"Unknown drift scaling: {cfg.drift_scaling}")


def sample_chain_batch(model: VectorField,
                       z0: np.ndarray,
                       features: np.ndarray,
                       cfg: SamplerConfig) -> np.ndarray:
    """
    Integrates the chain for a stack of start states.

    :param model: Learned (or oracle) vector field.
    :param z0: Start coordinates ``(B, n, 3)``.
    :param features: Atom types ``(B, n)``.
    :param cfg: Sampler settings; ``cfg.sched.N`` segments are integrated.
    :type cfg: SamplerConfig
    :return: States at every segment boundary, ``(N + 1, B, n, 3)``; entry 0 is ``z0``.
    :rtype: numpy.ndarray
    :raises DivergenceError: If a state becomes non-finite; ``step`` is the global
        Euler step index.
    """
    sched: BridgeSchedule = cfg.sched
    steps = cfg.steps_per_segment
    dt = sched.T / steps
    atom_types = as_tensor(features, dtype=torch.long)
    x = as_tensor(np.array(z0, dtype=np.float64))
    boundaries = [np.array(z0, dtype=np.float64)]

    with torch.no_grad():
        for i in range(sched.N):
            condition = x.clone()
            factor = _drift_factor(i, cfg)
            for k in range(steps):
                t = torch.full((x.shape[0],), i * sched.T + k * dt, dtype=x.dtype)
                x = x + factor * model(x, condition, atom_types, t) * dt
                if not torch.all(torch.isfinite(x)):
                    step = i * steps + k
                    logger.error("Sampler diverged at step %d (segment %d)", step, i)
                    raise DivergenceError(f"non-finite state at Euler step {step}", step=step)
            boundaries.append(x.numpy().copy())
    logger.debug("sampled %d records over %d segments", x.shape[0], sched.N)
    return np.stack(boundaries)


def sample_bridge_batch(model: VectorField,
                        z0: np.ndarray,
                        features: np.ndarray,
                        cfg: SamplerConfig) -> np.ndarray:
    """
    Integrates a single bridge (the first segment's schedule) for a stack of states.

    :return: Predicted targets ``(B, n, 3)``.
    :rtype: numpy.ndarray
    """
    single = SamplerConfig(sched=BridgeSchedule(sigma=cfg.sched.sigma, T=cfg.sched.T, N=1),
                           steps_per_segment=cfg.steps_per_segment,
                           drift_scaling=cfg.drift_scaling)
    return sample_chain_batch(model, z0, features, single)[-1]


def sample_bridge(model: VectorField, z0: GeometricState, cfg: SamplerConfig) -> GeometricState:
    """
    Predicts the target state of one bridge started at ``z0``.

    :param model: Learned vector field.
    :param z0: Start state.
    :type z0: GeometricState
    :param cfg: Sampler settings.
    :type cfg: SamplerConfig
    :rtype: GeometricState
    """
    coords = sample_bridge_batch(model, z0.coords[None], z0.features[None], cfg)
    return z0.with_coords(coords[0])


def sample_chain(model: VectorField, z0: GeometricState,
                 cfg: SamplerConfig) -> list[GeometricState]:
    """
    Predicts the whole chain ``[z0, R^{T}, ..., R^{N T}]`` started at ``z0``.

    :rtype: list[GeometricState]
    """
    boundaries = sample_chain_batch(model, z0.coords[None], z0.features[None], cfg)
    return [z0] + [z0.with_coords(frame[0]) for frame in boundaries[1:]]
