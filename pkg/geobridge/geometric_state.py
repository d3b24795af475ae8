"""
Geometric state of an n-atom system.

A state couples Cartesian coordinates (n x 3, float64, Angstrom) with integer atom-type
ids. Both arrays are copied on construction and marked read-only, so a state can be
shared freely between threads.
"""
from dataclasses import dataclass

import numpy as np

from .errors import StateError


__all__ = ["GeometricState", "Coords"]

type Coords = np.ndarray


@dataclass(frozen=True, eq=False)
class GeometricState:
    """
    Represents the coordinates and atom types of one geometric state.

    :ivar coords: Atom positions, shape ``(n, 3)``, float64, Angstrom.
    :type coords: numpy.ndarray
    :ivar features: Atom-type ids, shape ``(n,)``, non-negative integers.
    :type features: numpy.ndarray
    """
    coords: Coords
    features: np.ndarray

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64)
        features = np.array(self.features)

        if coords.ndim != 2 or coords.shape[1] != 3 or coords.shape[0] < 1:
            raise StateError(f"coords must have shape (n, 3) with n >= 1, got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise StateError("coords must be finite")
        if features.shape != (coords.shape[0],):
            raise StateError(f"features must have shape ({coords.shape[0]},), "
                             f"got {features.shape}")
        if features.size and (not np.issubdtype(features.dtype, np.integer)
                              or features.min() < 0):
            raise StateError("features must be non-negative integers")

        features = features.astype(np.int64)
        coords.setflags(write=False)
        features.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "features", features)

    @property
    def n_atoms(self) -> int:
        """Number of atoms in the state."""
        return self.coords.shape[0]

    def with_coords(self, coords: Coords) -> "GeometricState":
        """
        Returns a state with the same atom types and new coordinates.

        :param coords: Replacement coordinates, shape ``(n, 3)``.
        :type coords: numpy.ndarray
        :return: New state sharing this state's features.
        :rtype: GeometricState
        """
        return GeometricState(coords=coords, features=self.features)

    def same_atoms(self, other: "GeometricState") -> bool:
        """True when both states have the same atom count and atom types."""
        return (self.n_atoms == other.n_atoms
                and bool(np.array_equal(self.features, other.features)))
