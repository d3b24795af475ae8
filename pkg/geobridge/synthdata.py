"""
Synthetic relaxation trajectories drawn from the prior SDE ``dR = -grad V dt + sigma dW``.

Every record gets its own random stream spawned from the dataset seed, so a record's
content does not depend on how records are grouped for vectorised simulation.
"""
from dataclasses import dataclass
from logging import getLogger

import numpy as np
from typeguard import typechecked

from .datasets import PairDataset, TrajectoryDataset, TrajectorySample
from .errors import ConfigError, SingularGradientError
from .geom import project_com_free_coords
from .oracles import simulate_prior_sde
from .potentials import PotentialSpec


__all__ = ["DatasetSpec", "generate_trajectories", "pairs_from_trajectories"]


logger = getLogger(__name__)

_CHUNK = 256


@dataclass(frozen=True)
class DatasetSpec:
    """
    :ivar n_records: Number of trajectories to simulate.
    :ivar n_atoms: Atoms per system.
    :ivar N: Segments per trajectory; records hold ``N + 1`` frames.
    :ivar sim_dt: Euler-Maruyama step.
    :ivar sim_steps_per_segment: Simulation steps between kept frames.
    :ivar sigma: Noise level of the prior SDE.
    :ivar seed: Root seed.
    :ivar init_spread: Standard deviation of the initial positions, Angstrom.
    :ivar n_atom_types: Atom types are drawn uniformly from ``range(n_atom_types)``.
    """
    n_records: int = 2000
    n_atoms: int = 5
    N: int = 10  # pylint: disable=invalid-name
    sim_dt: float = 1e-3
    sim_steps_per_segment: int = 100
    sigma: float = 0.5
    seed: int = 0
    init_spread: float = 2.0
    n_atom_types: int = 1

    def __post_init__(self):
        for name in ("n_records", "n_atoms", "N", "sim_steps_per_segment", "n_atom_types"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.sim_dt > 0:
            raise ConfigError(f"sim_dt must be > 0, got {self.sim_dt}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.init_spread < 0:
            raise ConfigError(f"init_spread must be >= 0, got {self.init_spread}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    @property
    def total_steps(self) -> int:
        """Simulation steps per record."""
        return self.N * self.sim_steps_per_segment


def _draw_record(spec: DatasetSpec, rng: np.random.Generator):
    """Atom types, initial coordinates and Brownian increments of one record, in that order."""
    features = rng.integers(0, spec.n_atom_types, size=spec.n_atoms)
    start = project_com_free_coords(spec.init_spread * rng.standard_normal((spec.n_atoms, 3)))
    increments = rng.standard_normal((spec.total_steps, spec.n_atoms, 3))
    return features, start, increments


def _simulate(spec: DatasetSpec, potential: PotentialSpec, starts: np.ndarray,
              increments: np.ndarray) -> np.ndarray:
    """Frames ``(N + 1, ..., n, 3)`` for stacked starts and increments."""
    path = simulate_prior_sde(potential, starts, spec.sigma, spec.sim_dt, spec.total_steps,
                              increments=increments, record_stride=spec.sim_steps_per_segment,
                              check_finite=False)
    return np.stack(path)


@typechecked
def generate_trajectories(spec: DatasetSpec, potential: PotentialSpec) -> TrajectoryDataset:
    """
    Simulates ``spec.n_records`` trajectories and keeps every
    ``sim_steps_per_segment``-th state.

    Records whose simulation leaves the finite range, or that hit coincident atoms,
    are skipped with a warning; the dataset then holds fewer than ``n_records``
    trajectories.

    :param spec: Dataset parameters.
    :type spec: DatasetSpec
    :param potential: Potential of the prior SDE.
    :type potential: PotentialSpec
    :rtype: TrajectoryDataset
    """
    streams = [np.random.default_rng(child)
               for child in np.random.SeedSequence(spec.seed).spawn(spec.n_records)]
    samples = []
    skipped = 0
    for offset in range(0, spec.n_records, _CHUNK):
        draws = [_draw_record(spec, rng) for rng in streams[offset:offset + _CHUNK]]
        starts = np.stack([start for _, start, _ in draws])
        increments = np.stack([inc for _, _, inc in draws], axis=1)
        try:
            frames = _simulate(spec, potential, starts, increments)
            per_record = [frames[:, index] for index in range(len(draws))]
        except SingularGradientError:
            logger.debug("coincident atoms in chunk at %d, simulating records one by one", offset)
            per_record = []
            for _, start, inc in draws:
                try:
                    per_record.append(_simulate(spec, potential, start, inc))
                except SingularGradientError:
                    per_record.append(None)
        for index, ((features, _, _), coords) in enumerate(zip(draws, per_record)):
            if coords is None or not np.all(np.isfinite(coords)):
                logger.warning("Skipping record %d: simulation diverged", offset + index)
                skipped += 1
                continue
            samples.append(TrajectorySample.from_arrays(coords, features))
    logger.info("Generated %d trajectories (%d skipped), N=%d, n_atoms=%d",
                len(samples), skipped, spec.N, spec.n_atoms)
    return TrajectoryDataset(samples=tuple(samples))


def pairs_from_trajectories(dataset: TrajectoryDataset) -> PairDataset:
    """One ``(first frame, last frame)`` pair per record."""
    return PairDataset(pairs=tuple((sample.frames[0], sample.frames[-1]) for sample in dataset))
