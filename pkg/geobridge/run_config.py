"""
Flat ``key = value`` run configuration shared by every command.

One line per key, ``#`` starts a comment, blank lines are ignored. The type of each
:class:`RunConfig` field decides how its text is parsed; the parsed value is checked
with typeguard and the sub-configurations built from the whole config validate the
rest when the file is loaded.
"""
import os
from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path
from types import NoneType, UnionType
from typing import Any, Mapping, Optional, get_args, get_origin

from typeguard import TypeCheckError, check_type

from .bridge_schedule import BridgeSchedule
from .errors import ConfigError
from .model_config import ModelConfig
from .oracles import KLStudyConfig, OUSpec
from .potentials import PotentialKind, PotentialSpec
from .sampler_config import DriftScaling, SamplerConfig
from .synthdata import DatasetSpec
from .train_config import LambdaSchedule, NoiseSchedule, TrainConfig, TrainMode


__all__ = ["RunConfig", "SEED_ENV"]


SEED_ENV = "GDB_SEED"

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


# pylint: disable=too-many-instance-attributes,invalid-name
@dataclass(frozen=True)
class RunConfig:
    """
    Every tunable of the pipeline in one flat record.

    ``seed`` drives data generation, training batches and the KL study; ``model_seed``
    drives parameter initialisation.
    """
    # chain of bridges
    sigma: float = 0.5
    T: float = 1.0
    N: int = 10
    # training
    learning_rate: float = 1e-3
    batch_size: int = 32
    steps: int = 2000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.0
    lambda_schedule: LambdaSchedule = LambdaSchedule.ENDPOINT_SCALED
    noise_schedule: NoiseSchedule = NoiseSchedule.ALGORITHM_LITERAL
    t_clip: Optional[float] = None
    grad_clip_norm: float = 10.0
    seed: int = 0
    log_every: int = 100
    train_mode: TrainMode = TrainMode.TRAJ
    # sampling
    steps_per_segment: int = 10
    drift_scaling: DriftScaling = DriftScaling.SIGMA_SQUARED
    # synthetic data
    n_records: int = 2000
    n_atoms: int = 5
    sim_dt: float = 1e-3
    sim_steps_per_segment: int = 100
    init_spread: float = 2.0
    n_atom_types: int = 1
    potential_kind: PotentialKind = PotentialKind.HARMONIC_PAIRS
    k: float = 5.0
    d0: float = 1.5
    # model
    feature_embed_dim: int = 32
    hidden_width: int = 64
    n_layers: int = 2
    time_embed_dim: int = 16
    max_atom_types: int = 16
    use_condition: bool = True
    model_seed: int = 0
    # KL study
    theta: float = 1.0
    ou_sigma: float = 1.0
    segment_counts: tuple[int, ...] = (1, 2, 4, 8, 16)
    paths_per_estimate: int = 2000
    euler_steps: int = 200
    total_time: float = 1.0

    def schedule(self) -> BridgeSchedule:
        """Chain schedule ``(sigma, T, N)``."""
        return BridgeSchedule(sigma=self.sigma, T=self.T, N=self.N)

    def train_config(self) -> TrainConfig:
        """Training settings."""
        return TrainConfig(learning_rate=self.learning_rate,
                           batch_size=self.batch_size,
                           steps=self.steps,
                           adam_beta1=self.adam_beta1,
                           adam_beta2=self.adam_beta2,
                           adam_eps=self.adam_eps,
                           weight_decay=self.weight_decay,
                           lambda_schedule=self.lambda_schedule,
                           noise_schedule=self.noise_schedule,
                           t_clip=self.t_clip,
                           grad_clip_norm=self.grad_clip_norm,
                           seed=self.seed,
                           log_every=self.log_every)

    def sampler_config(self, steps_per_segment: Optional[int] = None) -> SamplerConfig:
        """Sampler settings; ``steps_per_segment`` overrides the configured value."""
        steps = self.steps_per_segment if steps_per_segment is None else steps_per_segment
        return SamplerConfig(sched=self.schedule(),
                             steps_per_segment=steps,
                             drift_scaling=self.drift_scaling)

    def dataset_spec(self) -> DatasetSpec:
        """Synthetic data settings."""
        return DatasetSpec(n_records=self.n_records,
                           n_atoms=self.n_atoms,
                           N=self.N,
                           sim_dt=self.sim_dt,
                           sim_steps_per_segment=self.sim_steps_per_segment,
                           sigma=self.sigma,
                           seed=self.seed,
                           init_spread=self.init_spread,
                           n_atom_types=self.n_atom_types)

    def potential_spec(self) -> PotentialSpec:
        """Potential of the data-generating SDE."""
        return PotentialSpec(kind=self.potential_kind, k=self.k, d0=self.d0)

    def model_config(self) -> ModelConfig:
        """Score model architecture."""
        return ModelConfig(feature_embed_dim=self.feature_embed_dim,
                           hidden_width=self.hidden_width,
                           n_layers=self.n_layers,
                           time_embed_dim=self.time_embed_dim,
                           max_atom_types=self.max_atom_types,
                           use_condition=self.use_condition,
                           seed=self.model_seed)

    def ou_spec(self) -> OUSpec:
        """OU prior of the KL study."""
        return OUSpec(theta=self.theta, sigma=self.ou_sigma)

    def kl_study_config(self) -> KLStudyConfig:
        """KL study settings."""
        return KLStudyConfig(segment_counts=self.segment_counts,
                             paths_per_estimate=self.paths_per_estimate,
                             euler_steps=self.euler_steps,
                             total_time=self.total_time)

    def validate(self) -> "RunConfig":
        """
        Builds every sub-configuration so that each checks its invariants.

        :raises ConfigError: On the first invalid value.
        """
        for name in ("seed", "model_seed"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        self.schedule()
        self.train_config().clip_for(self.T)
        self.sampler_config()
        self.dataset_spec()
        self.potential_spec()
        if self.n_atom_types > self.max_atom_types:
            raise ConfigError(f"n_atom_types={self.n_atom_types} exceeds "
                              f"max_atom_types={self.max_atom_types}")
        self.model_config()
        self.ou_spec()
        self.kl_study_config()
        return self

    def to_text(self) -> str:
        """Canonical text form; :meth:`from_text` reads it back to an equal config."""
        return "".join(f"{field.name} = {_format_value(getattr(self, field.name))}\n"
                       for field in fields(self))

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        """
        Parses and validates a config text. Missing keys keep their defaults.

        :raises ConfigError: For unknown or repeated keys, malformed lines and invalid
            values; the message names the offending key.
        """
        known = {field.name: field.type for field in fields(cls)}
        values: dict[str, Any] = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"line {number}: expected 'key = value', got {raw!r}")
            if key not in known:
                raise ConfigError(f"unknown config key: {key}")
            if key in values:
                raise ConfigError(f"duplicate config key: {key}")
            values[key] = _parse_value(key, value.strip(), known[key])
        return cls(**values).validate()

    @classmethod
    def load(cls, path: Path | str, environ: Optional[Mapping[str, str]] = None) -> "RunConfig":
        """
        Reads a config file and applies the ``GDB_SEED`` environment override.

        :raises ConfigError: For invalid content or a non-integer or negative ``GDB_SEED``.
        :raises OSError: If the file cannot be read.
        """
        config = cls.from_text(Path(path).read_text(encoding="utf-8"))
        return config.with_env_overrides(os.environ if environ is None else environ).validate()

    def with_env_overrides(self, environ: Mapping[str, str]) -> "RunConfig":
        """Replaces ``seed`` with ``environ["GDB_SEED"]`` when set."""
        if SEED_ENV not in environ:
            return self
        return replace(self, seed=_parse_value(SEED_ENV, environ[SEED_ENV], int))


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, tuple):
        return ",".join(str(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_scalar(text: str, expected: type):
    if issubclass(expected, Enum):
        return expected(text)
    if expected is bool:
        lowered = text.lower()
        if lowered not in _TRUE + _FALSE:
            raise ValueError(f"not a boolean: {text!r}")
        return lowered in _TRUE
    return expected(text)


def _parse_value(key: str, text: str, expected):
    try:
        origin = get_origin(expected)
        if origin is tuple:
            item_type = get_args(expected)[0]
            value = tuple(_parse_scalar(item.strip(), item_type) for item in text.split(","))
        elif origin is UnionType or NoneType in get_args(expected):
            if text.lower() == "none":
                value = None
            else:
                value = _parse_scalar(text, next(arg for arg in get_args(expected)
                                                 if arg is not NoneType))
        else:
            value = _parse_scalar(text, expected)
        check_type(value, expected)
    except (ValueError, TypeCheckError) as e:
        raise ConfigError(f"invalid value for {key}: {text!r} ({e})") from e
    return value
