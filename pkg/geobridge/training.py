"""
Training of the score model on endpoint pairs (single bridge) and on trajectories
(chain of bridges with trajectory guidance).

Each step draws, in a fixed order, the record indices, one uniform time per item over
the whole chain and the noise. The time is split into a segment and a local time, the
local time is mapped into ``[t_clip, T - t_clip]``, the noised state is drawn from the
segment's bridge marginal and the regression target is the bridge score
``(z_{i+1} - R) / (sigma_i^2 (T - t'))``. The model sees the global time and the
segment start state as condition.
"""
from functools import lru_cache
from logging import getLogger
from typing import Optional, TextIO

import numpy as np
import torch
from typeguard import typechecked

from .bridge import segment_index, sigma_for_segment
from .bridge_config import BridgeConfig
from .bridge_schedule import BridgeSchedule
from .datasets import PairDataset, TrajectoryDataset
from .errors import ConfigError, DivergenceError, NumericalError, StateError
from .kernels import bridge_marginal, project_noise, smoothed_marginal
from .score_model import ScoreBatch, ScoreModel, as_tensor, loss_and_grad
from .train_config import LambdaSchedule, NoiseSchedule, TrainConfig, TrainMode


__all__ = ["lambda_weight",
           "build_pair_batch",
           "build_traj_batch",
           "make_optimizer",
           "adam_update",
           "train_step_pairs",
           "train_step_traj",
           "Trainer"]


logger = getLogger(__name__)


def lambda_weight(t: float, schedule: LambdaSchedule, cfg: BridgeConfig) -> float:
    """
    Loss weight at (segment-local) time ``t``.

    :param t: Time in ``[0, T]``.
    :param schedule: Weighting rule.
    :type schedule: LambdaSchedule
    :param cfg: Parameters ``(sigma, T)`` of the bridge the time belongs to.
    :type cfg: BridgeConfig
    :rtype: float
    """
    if schedule == LambdaSchedule.CONSTANT_ONE:
        return 1.0
    if schedule == LambdaSchedule.ENDPOINT_SCALED:
        return float((cfg.sigma ** 2 * (cfg.T - t)) ** 2)
    raise NotImplementedError(f"Unknown lambda schedule: {schedule}")


@lru_cache(maxsize=8)
def _stacked(dataset) -> tuple[np.ndarray, np.ndarray]:
    # datasets are immutable and hash by identity
    if len(dataset) == 0:
        raise StateError("dataset must not be empty")
    return dataset.stacked()


# pylint: disable=too-many-locals
def _assemble_batch(coords: np.ndarray,
                    features: np.ndarray,
                    cfg: TrainConfig,
                    sched: BridgeSchedule,
                    rng: np.random.Generator) -> ScoreBatch:
    n_records, _, n_atoms, _ = coords.shape
    size = cfg.batch_size
    T = sched.T
    t_clip = cfg.clip_for(T)

    indices = rng.integers(n_records, size=size)
    u = rng.uniform(0.0, sched.total_time, size=size)
    eps = rng.standard_normal((size, n_atoms, 3))

    segments = [segment_index(float(value), sched) for value in u]
    seg = np.array([s.i for s in segments])
    t_local = t_clip + np.array([s.t_local for s in segments]) * (T - 2 * t_clip) / T
    sigmas = np.array([sigma_for_segment(i, sched) for i in seg])

    z_start = coords[indices, seg]
    z_end = coords[indices, seg + 1]
    t_b = t_local[:, None, None]
    sigma_b = sigmas[:, None, None]
    unit = BridgeConfig(sigma=1.0, T=T)
    if cfg.noise_schedule == NoiseSchedule.ALGORITHM_LITERAL:
        marginal = bridge_marginal(z_start, z_end, t_b, unit)
    elif cfg.noise_schedule == NoiseSchedule.SMOOTHED_INITIAL:
        marginal = smoothed_marginal(z_start, z_end, t_b, unit)
    else:
        raise NotImplementedError(f"Unknown noise schedule: {cfg.noise_schedule}")
    r_t = marginal.mean + sigma_b * marginal.std * project_noise(eps)
    target = (z_end - r_t) / (sigma_b ** 2 * (T - t_b))
    weights = np.array([lambda_weight(t, cfg.lambda_schedule, BridgeConfig(sigma=s, T=T))
                        for t, s in zip(t_local, sigmas)])

    logger.debug("batch: segments=%s", np.bincount(seg, minlength=sched.N).tolist())
    return ScoreBatch(r_t=as_tensor(r_t),
                      r_0=as_tensor(z_start),
                      features=as_tensor(features[indices], dtype=torch.long),
                      t=as_tensor(seg * T + t_local),
                      target=as_tensor(target),
                      weight=as_tensor(weights))


def build_pair_batch(dataset: PairDataset,
                     cfg: TrainConfig,
                     sched: BridgeSchedule,
                     rng: np.random.Generator) -> ScoreBatch:
    """
    Draws one training batch from endpoint pairs (single bridge, ``sched.N`` ignored).

    :rtype: ScoreBatch
    """
    coords, features = _stacked(dataset)
    single = BridgeSchedule(sigma=sched.sigma, T=sched.T, N=1)
    return _assemble_batch(coords, features, cfg, single, rng)


def build_traj_batch(dataset: TrajectoryDataset,
                     cfg: TrainConfig,
                     sched: BridgeSchedule,
                     rng: np.random.Generator) -> ScoreBatch:
    """
    Draws one training batch from trajectories.

    :rtype: ScoreBatch
    :raises ConfigError: If the dataset's segment count differs from ``sched.N``.
    """
    coords, features = _stacked(dataset)
    if coords.shape[1] - 1 != sched.N:
        raise ConfigError(f"dataset has N={coords.shape[1] - 1}, schedule has N={sched.N}")
    return _assemble_batch(coords, features, cfg, sched, rng)


def make_optimizer(model: ScoreModel, cfg: TrainConfig) -> torch.optim.AdamW:
    """AdamW over all model parameters with the configured constants."""
    return torch.optim.AdamW(model.parameters(),
                             lr=cfg.learning_rate,
                             betas=(cfg.adam_beta1, cfg.adam_beta2),
                             eps=cfg.adam_eps,
                             weight_decay=cfg.weight_decay)


def adam_update(model: ScoreModel,
                grads: dict[str, torch.Tensor],
                optimizer: torch.optim.Optimizer,
                clip_norm: Optional[float] = None):
    """
    Applies one decoupled-weight-decay Adam step with the given gradients.

    The optimiser owns the moment estimates and the step count, so repeated calls with
    the same optimiser continue one bias-corrected sequence.

    :param model: Model whose parameters are updated in place.
    :param grads: Gradient per parameter name, as returned by ``loss_and_grad``.
    :param optimizer: Optimiser built by :func:`make_optimizer`.
    :param clip_norm: When given, rescales gradients to this global norm first.
    """
    for name, param in model.named_parameters():
        param.grad = grads[name].detach().clone()
    if clip_norm is not None:
        torch.nn.utils.clip_grad_norm_(model.parameters(), clip_norm)
    optimizer.step()
    optimizer.zero_grad(set_to_none=True)


def _train_step(model, optimizer, batch: ScoreBatch, cfg: TrainConfig) -> float:
    loss, grads = loss_and_grad(model, batch)
    adam_update(model, grads, optimizer, clip_norm=cfg.grad_clip_norm)
    return loss


# pylint: disable=too-many-arguments,too-many-positional-arguments
def train_step_pairs(model: ScoreModel,
                     optimizer: torch.optim.Optimizer,
                     dataset: PairDataset,
                     cfg: TrainConfig,
                     sched: BridgeSchedule,
                     rng: np.random.Generator) -> float:
    """
    One optimiser step of single-bridge training on endpoint pairs.

    :return: The batch loss before the update.
    :rtype: float
    :raises NumericalError: If the loss or gradients are not finite.
    """
    return _train_step(model, optimizer, build_pair_batch(dataset, cfg, sched, rng), cfg)


def train_step_traj(model: ScoreModel,
                    optimizer: torch.optim.Optimizer,
                    dataset: TrajectoryDataset,
                    cfg: TrainConfig,
                    sched: BridgeSchedule,
                    rng: np.random.Generator) -> float:
    """
    One optimiser step of training with trajectory guidance.

    :return: The batch loss before the update.
    :rtype: float
    :raises ConfigError: If ``sched.N`` differs from the dataset's segment count.
    :raises NumericalError: If the loss or gradients are not finite.
    """
    return _train_step(model, optimizer, build_traj_batch(dataset, cfg, sched, rng), cfg)


class Trainer:
    """
    Runs the training loop for one model.

    The random stream is seeded from ``cfg.seed`` so a run is a deterministic function
    of the dataset, the configuration and the seed.

    :ivar __model: Model being trained.
    :ivar __optimizer: AdamW optimiser.
    :ivar __rng: Random stream for batches.
    :ivar __step: Number of completed steps.
    """
    @typechecked
    def __init__(self, model: ScoreModel, cfg: TrainConfig, sched: BridgeSchedule):
        self.__model = model
        self.__cfg = cfg
        self.__sched = sched
        self.__optimizer = make_optimizer(model, cfg)
        self.__rng = np.random.default_rng(cfg.seed)
        self.__step = 0

    @property
    def model(self) -> ScoreModel:
        """The model being trained."""
        return self.__model

    @property
    def step(self) -> int:
        """Number of completed optimiser steps."""
        return self.__step

    def train_step(self, dataset: PairDataset | TrajectoryDataset, mode: TrainMode) -> float:
        """
        Runs one step in the requested mode.

        :rtype: float
        """
        if mode == TrainMode.PAIRS:
            loss = train_step_pairs(self.__model, self.__optimizer, dataset,
                                    self.__cfg, self.__sched, self.__rng)
        elif mode == TrainMode.TRAJ:
            loss = train_step_traj(self.__model, self.__optimizer, dataset,
                                   self.__cfg, self.__sched, self.__rng)
        else:
            raise NotImplementedError(f"Unknown training mode: {mode}")
        self.__step += 1
        return loss

    def fit(self,
            dataset: PairDataset | TrajectoryDataset,
            mode: TrainMode,
            steps: Optional[int] = None,
            loss_log: Optional[TextIO] = None) -> list[float]:
        """
        Trains for ``steps`` steps (default ``cfg.steps``).

        :param dataset: Pairs for ``TrainMode.PAIRS``, trajectories for ``TrainMode.TRAJ``.
        :param mode: Training algorithm.
        :type mode: TrainMode
        :param steps: Number of steps.
        :param loss_log: Optional text stream receiving one ``"step loss"`` line per step.
        :return: The loss of every step.
        :rtype: list[float]
        :raises DivergenceError: If a loss becomes non-finite; ``step`` is the last step
            with a finite loss.
        """
        steps = self.__cfg.steps if steps is None else steps
        logger.info("Training %s for %d steps (batch %d, lr %s)",
                    mode.value, steps, self.__cfg.batch_size, self.__cfg.learning_rate)
        losses = []
        for _ in range(steps):
            try:
                loss = self.train_step(dataset, mode)
            except NumericalError as e:
                last = self.__step if self.__step else None
                logger.error("Training diverged after step %s: %s", last, e)
                raise DivergenceError(f"training diverged; last finite step {last}",
                                      step=last) from e
            losses.append(loss)
            if loss_log is not None:
                loss_log.write(f"{self.__step} {loss!r}\n")
            if self.__step % self.__cfg.log_every == 0:
                logger.info("step %d loss %.6g", self.__step, loss)
        return losses
