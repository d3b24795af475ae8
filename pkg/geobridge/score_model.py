"""
The conditional vector field ``v_theta(R^t, t; R^0)``.

The network works on the fully connected atom graph. Each layer builds invariant
messages from atom embeddings, squared distances of the current and the condition
coordinates, their inner product and a time embedding; scalar gates turn messages into
weights on the difference vectors ``x_i - x_j`` and ``c_i - c_j``. Summing those gives
an output that rotates with the inputs, ignores common translations and permutes with
the atoms. The final field is projected to the CoM-free subspace.

Parameters are float64 ``torch`` tensors; gradients come from ``torch.autograd``.
"""
from dataclasses import dataclass
from functools import lru_cache
from logging import getLogger

import numpy as np
import torch
from torch import nn
from typeguard import typechecked

from .errors import ConfigError, InputError, NumericalError, StateError
from .model_config import ModelConfig


__all__ = ["ScoreModel", "ScoreBatch", "time_embedding", "loss_and_grad",
           "parameter_arrays", "load_parameter_arrays", "as_tensor"]


logger = getLogger(__name__)

DTYPE = torch.float64


def as_tensor(value, dtype=DTYPE) -> torch.Tensor:
    """Converts numpy arrays and scalars to tensors without copying tensors."""
    if isinstance(value, torch.Tensor):
        return value.to(dtype)
    return torch.as_tensor(np.asarray(value), dtype=dtype)


@lru_cache(maxsize=32)
def _frequencies(dim: int) -> torch.Tensor:
    half = dim // 2
    if half == 1:
        return torch.ones(1, dtype=DTYPE)
    return torch.logspace(0.0, 3.0, half, dtype=DTYPE)


def time_embedding(t, dim: int) -> torch.Tensor:
    """
    Sinusoidal features ``[sin(w_k t), cos(w_k t)]`` with ``w_k`` geometrically spaced in
    ``[1, 1000]``.

    :param t: Time, scalar or tensor of shape ``(B,)``.
    :param dim: Number of features; must be even.
    :type dim: int
    :return: Tensor of shape ``t.shape + (dim,)``.
    :rtype: torch.Tensor
    :raises ConfigError: If ``dim`` is odd or not positive.
    """
    if dim < 2 or dim % 2:
        raise ConfigError(f"time embedding dimension must be even and positive, got {dim}")
    angles = as_tensor(t)[..., None] * _frequencies(dim)
    return torch.cat([torch.sin(angles), torch.cos(angles)], dim=-1)


class _GateMLP(nn.Sequential):
    def __init__(self, width: int):
        super().__init__(nn.Linear(width, width, dtype=DTYPE),
                         nn.SiLU(),
                         nn.Linear(width, 1, dtype=DTYPE))

    @property
    def head(self) -> nn.Linear:
        """Last linear layer; zero-initialised so the initial field vanishes."""
        return self[-1]


class EquivariantLayer(nn.Module):
    """
    One message-passing layer.

    :ivar message: MLP mapping pair invariants to a message.
    :ivar gate_x: Scalar gate on current-coordinate differences.
    :ivar gate_c: Scalar gate on condition-coordinate differences.
    :ivar node_update: Linear map adding the mean incoming message to the node state.
    """
    def __init__(self, config: ModelConfig):
        super().__init__()
        in_width = 2 * config.feature_embed_dim + 3 + config.time_embed_dim
        width = config.hidden_width
        self.message = nn.Sequential(nn.Linear(in_width, width, dtype=DTYPE),
                                     nn.SiLU(),
                                     nn.Linear(width, width, dtype=DTYPE),
                                     nn.SiLU())
        self.gate_x = _GateMLP(width)
        self.gate_c = _GateMLP(width)
        self.node_update = nn.Linear(width, config.feature_embed_dim, dtype=DTYPE)

    # pylint: disable=too-many-locals
    def forward(self, h, x, c, t_embed, off_diagonal):
        """
        :param h: Node states ``(B, n, E)``.
        :param x: Current coordinates ``(B, n, 3)``.
        :param c: Condition coordinates ``(B, n, 3)``.
        :param t_embed: Time features ``(B, D)``.
        :param off_diagonal: Mask ``(n, n, 1)`` with zeros on the diagonal.
        :return: Updated node states and this layer's vector field ``(B, n, 3)``.
        """
        n = x.shape[1]
        dx = x[:, :, None, :] - x[:, None, :, :]
        dc = c[:, :, None, :] - c[:, None, :, :]
        pair_invariants = torch.stack([(dx * dx).sum(-1),
                                       (dc * dc).sum(-1),
                                       (dx * dc).sum(-1)], dim=-1)
        h_i = h[:, :, None, :].expand(-1, -1, n, -1)
        h_j = h[:, None, :, :].expand(-1, n, -1, -1)
        t_ij = t_embed[:, None, None, :].expand(-1, n, n, -1)
        messages = self.message(torch.cat([h_i, h_j, pair_invariants, t_ij], dim=-1))
        messages = messages * off_diagonal

        scale = 1.0 / (n - 1)
        field = ((dx * self.gate_x(messages) + dc * self.gate_c(messages)) * off_diagonal)
        field = field.sum(dim=2) * scale
        h = h + self.node_update(messages.sum(dim=2) * scale)
        return h, field


class ScoreModel(nn.Module):
    """
    SO(3)-equivariant, T(3)-invariant, permutation-equivariant vector field network.

    :ivar config: Architecture hyperparameters.
    :type config: ModelConfig
    """
    @typechecked
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.embedding = nn.Embedding(config.max_atom_types, config.feature_embed_dim,
                                      dtype=DTYPE)
        self.layers = nn.ModuleList(EquivariantLayer(config) for _ in range(config.n_layers))
        self.reset_parameters(config.seed)

    def reset_parameters(self, seed: int, zero_gates: bool = True):
        """
        Re-draws all parameters uniformly in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` from a
        generator seeded with ``seed``; gate heads start at zero unless ``zero_gates``
        is False.

        :param seed: Initialisation seed.
        :type seed: int
        :param zero_gates: Zero the last layer of every gate MLP.
        :type zero_gates: bool
        """
        generator = torch.Generator().manual_seed(seed)

        def fill(tensor: torch.Tensor, fan_in: int):
            bound = 1.0 / np.sqrt(fan_in)
            sample = torch.rand(tensor.shape, generator=generator, dtype=DTYPE)
            tensor.copy_(sample * 2 * bound - bound)

        with torch.no_grad():
            fill(self.embedding.weight, self.config.max_atom_types)
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    fill(module.weight, module.in_features)
                    fill(module.bias, module.in_features)
            if zero_gates:
                for layer in self.layers:
                    for gate in (layer.gate_x, layer.gate_c):
                        gate.head.weight.zero_()
                        gate.head.bias.zero_()

    def forward(self, r_t, r_0, features, t) -> torch.Tensor:  # pylint: disable=arguments-differ
        """
        Evaluates the vector field.

        :param r_t: Current coordinates ``(n, 3)`` or ``(B, n, 3)``.
        :param r_0: Condition coordinates, same shape as ``r_t``.
        :param features: Atom-type ids ``(n,)`` or ``(B, n)``.
        :param t: Time, scalar or ``(B,)``.
        :return: Per-atom vectors with the shape of ``r_t``, CoM-free.
        :rtype: torch.Tensor
        :raises StateError: If shapes disagree or there are fewer than two atoms.
        """
        x = as_tensor(r_t)
        c = as_tensor(r_0)
        atom_types = as_tensor(features, dtype=torch.long)
        unbatched = x.dim() == 2
        if unbatched:
            x, c, atom_types = x[None], c[None], atom_types[None]
        if x.shape != c.shape or x.shape[:2] != atom_types.shape or x.shape[-1] != 3:
            raise StateError(f"inconsistent shapes {tuple(x.shape)}, {tuple(c.shape)}, "
                             f"{tuple(atom_types.shape)}")
        n = x.shape[1]
        if n < 2:
            raise StateError("the score model requires at least two atoms")
        if not self.config.use_condition:
            c = torch.zeros_like(x)

        times = as_tensor(t).reshape(-1).expand(x.shape[0])
        t_embed = time_embedding(times, self.config.time_embed_dim)
        off_diagonal = (1.0 - torch.eye(n, dtype=DTYPE))[:, :, None]

        h = self.embedding(atom_types)
        field = torch.zeros_like(x)
        for layer in self.layers:
            h, layer_field = layer(h, x, c, t_embed, off_diagonal)
            field = field + layer_field
        field = field - field.mean(dim=1, keepdim=True)
        return field[0] if unbatched else field


@dataclass(frozen=True, eq=False)
class ScoreBatch:
    """
    One regression batch for the weighted matching loss.

    :ivar r_t: Noised states ``(B, n, 3)``.
    :ivar r_0: Condition states ``(B, n, 3)``.
    :ivar features: Atom types ``(B, n)``.
    :ivar t: Times handed to the model ``(B,)``.
    :ivar target: Regression targets ``(B, n, 3)``.
    :ivar weight: Loss weights ``lambda(t)`` ``(B,)``.
    """
    r_t: torch.Tensor
    r_0: torch.Tensor
    features: torch.Tensor
    t: torch.Tensor
    target: torch.Tensor
    weight: torch.Tensor

    def __len__(self) -> int:
        return self.r_t.shape[0]


def batch_loss(model: ScoreModel, batch: ScoreBatch) -> torch.Tensor:
    """Mean over the batch of ``lambda(t) ||v_theta - target||^2`` as a graph tensor."""
    if len(batch) == 0:
        raise InputError("batch must not be empty")
    prediction = model(batch.r_t, batch.r_0, batch.features, batch.t)
    residual = prediction - batch.target
    per_item = batch.weight * (residual * residual).sum(dim=(-1, -2))
    return per_item.mean()


def loss_and_grad(model: ScoreModel,
                  batch: ScoreBatch) -> tuple[float, dict[str, torch.Tensor]]:
    """
    Evaluates the weighted matching loss and its exact gradient.

    :param model: Score model; its parameters are not modified.
    :type model: ScoreModel
    :param batch: Regression batch.
    :type batch: ScoreBatch
    :return: The loss and a gradient tensor per named parameter.
    :rtype: tuple[float, dict[str, torch.Tensor]]
    :raises NumericalError: If the loss or any gradient is not finite.
    """
    names, params = zip(*model.named_parameters())
    loss = batch_loss(model, batch)
    if not torch.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss.item()}")
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    result = {}
    for name, param, grad in zip(names, params, grads):
        grad = torch.zeros_like(param) if grad is None else grad
        if not torch.all(torch.isfinite(grad)):
            raise NumericalError(f"non-finite gradient for {name}")
        result[name] = grad
    return loss.item(), result


def parameter_arrays(model: ScoreModel) -> dict[str, np.ndarray]:
    """Copies every parameter into a float64 numpy array, in registration order."""
    return {name: tensor.detach().cpu().numpy().astype(np.float64, copy=True)
            for name, tensor in model.state_dict().items()}


def load_parameter_arrays(model: ScoreModel, arrays: dict[str, np.ndarray]):
    """
    Loads arrays produced by :func:`parameter_arrays`.

    :raises StateError: If names or shapes do not match the model.
    """
    expected = model.state_dict()
    if set(expected) != set(arrays):
        raise StateError(f"parameter names differ: {sorted(set(expected) ^ set(arrays))}")
    state = {}
    for name, tensor in expected.items():
        if tuple(tensor.shape) != tuple(arrays[name].shape):
            raise StateError(f"shape mismatch for {name}: {tuple(tensor.shape)} vs "
                             f"{tuple(arrays[name].shape)}")
        state[name] = torch.as_tensor(np.array(arrays[name], dtype=np.float64))
    model.load_state_dict(state)
