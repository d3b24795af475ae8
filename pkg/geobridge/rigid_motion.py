"""
Proper rigid motions of 3-D space (elements of SE(3)).

A motion maps a point ``r`` to ``rotation @ r + translation``. Construction checks that
the rotation is orthonormal with determinant +1, so reflections never enter the
pipeline.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import StateError


__all__ = ["RigidMotion"]

_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class RigidMotion:
    """
    A rotation followed by a translation.

    :ivar rotation: Proper rotation matrix, shape ``(3, 3)``.
    :type rotation: numpy.ndarray
    :ivar translation: Translation vector, shape ``(3,)``, Angstrom.
    :type translation: numpy.ndarray
    """
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64)
        translation = np.array(self.translation, dtype=np.float64)
        if rotation.shape != (3, 3) or translation.shape != (3,):
            raise StateError("rotation must be 3x3 and translation a 3-vector")
        if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(translation))):
            raise StateError("rigid motion entries must be finite")
        if np.max(np.abs(rotation.T @ rotation - np.eye(3))) > _TOLERANCE:
            raise StateError("rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > _TOLERANCE:
            raise StateError("rotation must have determinant +1")
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidMotion":
        """The motion that leaves every point in place."""
        return cls(rotation=np.eye(3), translation=np.zeros(3))

    @classmethod
    def random(cls, rng: np.random.Generator, translation_scale: float = 1.0) -> "RigidMotion":
        """
        Draws a uniformly random rotation and a Gaussian translation.

        :param rng: Random stream.
        :type rng: numpy.random.Generator
        :param translation_scale: Standard deviation of each translation component.
        :type translation_scale: float
        :rtype: RigidMotion
        """
        rotation = Rotation.random(random_state=rng).as_matrix()
        return cls(rotation=rotation,
                   translation=translation_scale * rng.standard_normal(3))

    def compose(self, first: "RigidMotion") -> "RigidMotion":
        """
        Returns the motion equal to applying ``first`` and then ``self``.

        :param first: Motion applied first.
        :type first: RigidMotion
        :rtype: RigidMotion
        """
        return RigidMotion(rotation=self.rotation @ first.rotation,
                           translation=self.rotation @ first.translation + self.translation)

    def apply(self, coords: np.ndarray) -> np.ndarray:
        """Maps coordinates of shape ``(..., 3)``."""
        return np.asarray(coords) @ self.rotation.T + self.translation

    def rotate(self, vectors: np.ndarray) -> np.ndarray:
        """Applies only the rotation part to vectors of shape ``(..., 3)``."""
        return np.asarray(vectors) @ self.rotation.T
