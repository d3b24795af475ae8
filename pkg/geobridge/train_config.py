"""
Training hyperparameters and the two schedule enumerations used by the matching loss.
"""
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError


__all__ = ["LambdaSchedule", "NoiseSchedule", "TrainConfig", "TrainMode"]


class LambdaSchedule(Enum):
    """
    Positive weighting ``lambda(t)`` of the matching loss.

    :cvar CONSTANT_ONE: ``lambda = 1``.
    :cvar ENDPOINT_SCALED: ``lambda = (sigma^2 (T - t))^2``; the loss becomes
        ``||(z1 - R^t) - sigma^2 (T - t) v||^2`` and stays bounded as ``t -> T``.
    """
    CONSTANT_ONE = "constant_one"
    ENDPOINT_SCALED = "endpoint_scaled"


class NoiseSchedule(Enum):
    """
    Law used to draw the noised state ``R^t`` in training.

    :cvar ALGORITHM_LITERAL: Bridge marginal with std ``sigma sqrt(t (T - t)) / T``.
    :cvar SMOOTHED_INITIAL: Bridge started from ``N(z0, sigma^2 I)``; std
        ``sigma sqrt((T - t) / T)``.
    """
    ALGORITHM_LITERAL = "algorithm_literal"
    SMOOTHED_INITIAL = "smoothed_initial"


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True)
class TrainConfig:
    """
    Optimiser and batch settings.

    ``t_clip`` is absolute time; None means ``1e-3 T`` of the schedule in use.
    """
    learning_rate: float = 1e-3
    batch_size: int = 32
    steps: int = 2000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.0
    lambda_schedule: LambdaSchedule = LambdaSchedule.ENDPOINT_SCALED
    noise_schedule: NoiseSchedule = NoiseSchedule.ALGORITHM_LITERAL
    t_clip: float | None = None
    grad_clip_norm: float = 10.0
    seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1 and self.adam_eps > 0):
            raise ConfigError("adam constants out of range")
        if self.t_clip is not None and self.t_clip < 0:
            raise ConfigError(f"t_clip must be >= 0, got {self.t_clip}")
        if not self.grad_clip_norm > 0:
            raise ConfigError(f"grad_clip_norm must be > 0, got {self.grad_clip_norm}")
        if self.log_every < 1:
            raise ConfigError(f"log_every must be >= 1, got {self.log_every}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    def clip_for(self, T: float) -> float:
        """
        Effective clipping margin for segments of duration ``T``.

        :raises ConfigError: If the margin is not below ``T / 2``.
        """
        t_clip = 1e-3 * T if self.t_clip is None else self.t_clip
        if not t_clip < T / 2:
            raise ConfigError(f"t_clip={t_clip} must be < T/2={T / 2}")
        return t_clip


class TrainMode(Enum):
    """
    Which training algorithm consumes the data.

    :cvar PAIRS: Endpoint pairs, a single bridge.
    :cvar TRAJ: Full trajectories, a chain of bridges (trajectory guidance).
    """
    PAIRS = "pairs"
    TRAJ = "traj"
