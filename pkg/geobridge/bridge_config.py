"""
The ``(sigma, T)`` pair that fixes one Brownian bridge of the Gaussian prior.
"""
from dataclasses import dataclass

from .errors import ConfigError


__all__ = ["BridgeConfig"]


@dataclass(frozen=True)
class BridgeConfig:
    """
    Diffusion coefficient and duration of a single bridge.

    :ivar sigma: Diffusion coefficient of the prior ``dR = sigma dW``.
    :type sigma: float
    :ivar T: Bridge duration.
    :type T: float
    """
    sigma: float
    T: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if not self.T > 0:
            raise ConfigError(f"T must be > 0, got {self.T}")
