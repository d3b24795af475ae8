"""
Architecture hyperparameters of the equivariant score model.
"""
from dataclasses import dataclass, fields

from .errors import ConfigError


__all__ = ["ModelConfig"]


@dataclass(frozen=True)
class ModelConfig:
    """
    Sizes of the conditional vector field network.

    :ivar feature_embed_dim: Width of the atom-type embedding and node state.
    :ivar hidden_width: Width of message and gate MLPs.
    :ivar n_layers: Number of message-passing layers.
    :ivar time_embed_dim: Number of sinusoidal time features; must be even.
    :ivar max_atom_types: Size of the atom-type embedding table.
    :ivar use_condition: When False the network ignores the condition state, giving the
        unconditioned ablation.
    :ivar seed: Seed of the parameter initialisation.
    """
    feature_embed_dim: int = 32
    hidden_width: int = 64
    n_layers: int = 2
    time_embed_dim: int = 16
    max_atom_types: int = 16
    use_condition: bool = True
    seed: int = 0

    def __post_init__(self):
        for field in fields(self):
            if field.name in ("use_condition", "seed"):
                continue
            if getattr(self, field.name) < 1:
                raise ConfigError(f"{field.name} must be >= 1, got {getattr(self, field.name)}")
        if self.time_embed_dim % 2:
            raise ConfigError(f"time_embed_dim must be even, got {self.time_embed_dim}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
