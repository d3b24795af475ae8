"""
Schedule of a chain of Brownian bridges: shared duration ``T``, segment count ``N``
and the linearly decaying per-segment diffusion coefficient.
"""
from dataclasses import dataclass

from .bridge_config import BridgeConfig
from .errors import ConfigError


__all__ = ["BridgeSchedule", "SegmentTime"]


@dataclass(frozen=True)
class BridgeSchedule:
    """
    Parameters shared by every bridge of a chain.

    :ivar sigma: Diffusion coefficient of the first segment.
    :type sigma: float
    :ivar T: Duration of each segment.
    :type T: float
    :ivar N: Number of segments; 1 means a single bridge.
    :type N: int
    """
    sigma: float
    T: float = 1.0
    N: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if not self.T > 0:
            raise ConfigError(f"T must be > 0, got {self.T}")
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")

    @property
    def total_time(self) -> float:
        """Duration ``N T`` of the whole chain."""
        return self.N * self.T

    def bridge(self) -> BridgeConfig:
        """The single-bridge parameters ``(sigma, T)``."""
        return BridgeConfig(sigma=self.sigma, T=self.T)


@dataclass(frozen=True)
class SegmentTime:
    """
    Position of a global chain time inside its segment.

    :ivar i: Segment index in ``[0, N-1]``.
    :type i: int
    :ivar t_local: Time since the segment start, in ``[0, T)``.
    :type t_local: float
    """
    i: int
    t_local: float

    def global_time(self, T: float) -> float:
        """Reconstructs ``i T + t_local``."""
        return self.i * T + self.t_local
