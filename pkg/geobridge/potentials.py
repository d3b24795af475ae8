"""
Pair potentials driving the synthetic relaxation dynamics.

``harmonic_pairs`` is ``V = (k/2) sum_{i<j} (|r_i - r_j| - d0)^2``; it depends on
interatomic distances only, so it is SE(3)-invariant and its gradient rotates with the
state and sums to zero over the atoms.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, SingularGradientError, StateError
from .geometric_state import Coords, GeometricState


__all__ = ["PotentialKind", "PotentialSpec", "potential_energy", "potential_gradient"]

_MIN_DISTANCE = 1e-9


class PotentialKind(Enum):
    """
    :cvar HARMONIC_PAIRS: Springs of rest length ``d0`` between all atom pairs.
    :cvar ZERO: No force; pure diffusion.
    """
    HARMONIC_PAIRS = "harmonic_pairs"
    ZERO = "zero"


@dataclass(frozen=True)
class PotentialSpec:
    """
    :ivar kind: Potential family.
    :ivar k: Spring constant (the drift scale is absorbed into it).
    :ivar d0: Rest length, Angstrom.
    """
    kind: PotentialKind = PotentialKind.HARMONIC_PAIRS
    k: float = 5.0
    d0: float = 1.5

    def __post_init__(self):
        if self.k < 0:
            raise ConfigError(f"k must be >= 0, got {self.k}")
        if not self.d0 > 0:
            raise ConfigError(f"d0 must be > 0, got {self.d0}")


def _coords_of(state: GeometricState | Coords) -> np.ndarray:
    if isinstance(state, GeometricState):
        return state.coords
    return np.asarray(state, dtype=np.float64)


def _pair_geometry(coords: np.ndarray):
    if coords.shape[-2] < 2:
        raise StateError("pair potentials need at least two atoms")
    diff = coords[..., :, None, :] - coords[..., None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    n = coords.shape[-2]
    off_diagonal = ~np.eye(n, dtype=bool)
    if np.any(dist[..., off_diagonal] < _MIN_DISTANCE):
        raise SingularGradientError("coincident atoms have no pair-potential gradient")
    return diff, dist, off_diagonal


def potential_energy(spec: PotentialSpec, state: GeometricState | Coords) -> np.ndarray | float:
    """
    Potential energy; a float for a single state, an array for batched coordinates.

    :param spec: Potential parameters.
    :type spec: PotentialSpec
    :param state: A state or coordinates of shape ``(..., n, 3)``.
    """
    coords = _coords_of(state)
    if spec.kind == PotentialKind.ZERO:
        energy = np.zeros(coords.shape[:-2])
    elif spec.kind == PotentialKind.HARMONIC_PAIRS:
        _, dist, off_diagonal = _pair_geometry(coords)
        stretch = np.where(off_diagonal, dist - spec.d0, 0.0)
        # every pair appears twice in the full matrix
        energy = 0.25 * spec.k * np.sum(stretch * stretch, axis=(-1, -2))
    else:
        raise NotImplementedError(f"Unknown potential kind: {spec.kind}")
    return float(energy) if np.ndim(energy) == 0 else energy


def potential_gradient(spec: PotentialSpec, state: GeometricState | Coords) -> Coords:
    """
    Gradient of the potential with respect to every atom position.

    :param spec: Potential parameters.
    :type spec: PotentialSpec
    :param state: A state or coordinates of shape ``(..., n, 3)``.
    :return: Array with the shape of the coordinates.
    :rtype: numpy.ndarray
    :raises SingularGradientError: If two atoms are closer than 1e-9.
    """
    coords = _coords_of(state)
    if spec.kind == PotentialKind.ZERO:
        return np.zeros_like(coords)
    if spec.kind != PotentialKind.HARMONIC_PAIRS:
        raise NotImplementedError(f"Unknown potential kind: {spec.kind}")
    diff, dist, off_diagonal = _pair_geometry(coords)
    safe = np.where(off_diagonal, dist, 1.0)
    coefficient = np.where(off_diagonal, spec.k * (dist - spec.d0) / safe, 0.0)
    return np.sum(coefficient[..., None] * diff, axis=-2)
