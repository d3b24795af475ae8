"""
In-memory datasets: endpoint pairs for single-bridge training and trajectories for
training with trajectory guidance.
"""
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import StateError
from .geometric_state import GeometricState


__all__ = ["TrajectorySample", "TrajectoryDataset", "PairDataset"]


@dataclass(frozen=True, eq=False)
class TrajectorySample:
    """
    ``N + 1`` ordered states of one system.

    :ivar frames: The states ``(R^0, ..., R^N)``; all share atoms and atom types.
    :type frames: tuple[GeometricState, ...]
    """
    frames: tuple[GeometricState, ...]

    def __post_init__(self):
        frames = tuple(self.frames)
        if len(frames) < 1:
            raise StateError("a trajectory needs at least one frame")
        for frame in frames[1:]:
            if not frame.same_atoms(frames[0]):
                raise StateError("trajectory frames must share atoms and atom types")
        object.__setattr__(self, "frames", frames)

    @classmethod
    def from_arrays(cls, coords: np.ndarray, features: np.ndarray) -> "TrajectorySample":
        """Builds a sample from coordinates of shape ``(N + 1, n, 3)``."""
        return cls(frames=tuple(GeometricState(coords=frame, features=features)
                                for frame in coords))

    @property
    def N(self) -> int:  # pylint: disable=invalid-name
        """Number of segments."""
        return len(self.frames) - 1

    @property
    def features(self) -> np.ndarray:
        """Atom types shared by every frame."""
        return self.frames[0].features

    def coords(self) -> np.ndarray:
        """Stacked coordinates, shape ``(N + 1, n, 3)``."""
        return np.stack([frame.coords for frame in self.frames])


@dataclass(frozen=True, eq=False)
class TrajectoryDataset:
    """
    Trajectories with a common segment count ``N``.

    :ivar samples: The trajectories.
    :type samples: tuple[TrajectorySample, ...]
    """
    samples: tuple[TrajectorySample, ...]

    def __post_init__(self):
        samples = tuple(self.samples)
        if samples and len({sample.N for sample in samples}) != 1:
            raise StateError("all trajectories of a dataset must have the same N")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[TrajectorySample]:
        return iter(self.samples)

    def __getitem__(self, index: int) -> TrajectorySample:
        return self.samples[index]

    @property
    def N(self) -> int:  # pylint: disable=invalid-name
        """Segment count shared by every trajectory."""
        if not self.samples:
            raise StateError("empty dataset has no segment count")
        return self.samples[0].N

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """
        Coordinates ``(records, N + 1, n, 3)`` and atom types ``(records, n)``.

        :raises StateError: If records differ in atom count.
        """
        if len({sample.frames[0].n_atoms for sample in self.samples}) > 1:
            raise StateError("records differ in atom count")
        return (np.stack([sample.coords() for sample in self.samples]),
                np.stack([sample.features for sample in self.samples]))


@dataclass(frozen=True, eq=False)
class PairDataset:
    """
    Couples ``(z0, z1)`` drawn from the joint data law.

    :ivar pairs: The couples; each shares atoms and atom types.
    :type pairs: tuple[tuple[GeometricState, GeometricState], ...]
    """
    pairs: tuple[tuple[GeometricState, GeometricState], ...]

    def __post_init__(self):
        pairs = tuple((start, end) for start, end in self.pairs)
        for start, end in pairs:
            if not start.same_atoms(end):
                raise StateError("pair members must share atoms and atom types")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_states(cls, starts: Sequence[GeometricState],
                    ends: Sequence[GeometricState]) -> "PairDataset":
        """Zips two equally long state sequences."""
        if len(starts) != len(ends):
            raise StateError("starts and ends must have the same length")
        return cls(pairs=tuple(zip(starts, ends)))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """
        Coordinates ``(records, 2, n, 3)`` and atom types ``(records, n)``, the layout
        of a one-segment trajectory dataset.

        :raises StateError: If records differ in atom count.
        """
        if len({start.n_atoms for start, _ in self.pairs}) > 1:
            raise StateError("records differ in atom count")
        coords = np.stack([np.stack([start.coords, end.coords]) for start, end in self.pairs])
        features = np.stack([start.features for start, _ in self.pairs])
        return coords, features
