"""
Settings of the deterministic Euler sampler.
"""
from dataclasses import dataclass
from enum import Enum

from .bridge_schedule import BridgeSchedule
from .errors import ConfigError


__all__ = ["DriftScaling", "SamplerConfig"]


class DriftScaling(Enum):
    """
    Factor between the learned field and the integrated drift.

    :cvar SIGMA_SQUARED: Drift ``sigma_i^2 v``; reaches the target for any sigma.
    :cvar LITERAL: Drift ``v``; equal to the former only for ``sigma = 1``.
    """
    SIGMA_SQUARED = "sigma_squared"
    LITERAL = "literal"


@dataclass(frozen=True)
class SamplerConfig:
    """
    :ivar sched: Chain schedule the model was trained with.
    :ivar steps_per_segment: Euler steps per bridge.
    :ivar drift_scaling: Drift factor rule.
    """
    sched: BridgeSchedule
    steps_per_segment: int = 10
    drift_scaling: DriftScaling = DriftScaling.SIGMA_SQUARED

    def __post_init__(self):
        if self.steps_per_segment < 1:
            raise ConfigError(f"steps_per_segment must be >= 1, got {self.steps_per_segment}")
