"""
Operations on geometric states: center of mass, the CoM-free projection, rigid motions
and Kabsch alignment.

All functions are pure. Array-level helpers (``*_coords``) accept coordinates with any
number of leading batch axes, shape ``(..., n, 3)``; the state-level functions wrap
them for :class:`GeometricState`.
"""
import numpy as np

from .errors import AlignmentError
from .geometric_state import Coords, GeometricState
from .rigid_motion import RigidMotion


__all__ = ["center_of_mass",
           "project_com_free",
           "project_com_free_coords",
           "apply_rigid_motion",
           "apply_rotation_only",
           "kabsch_align",
           "rmsd"]


def center_of_mass(state: GeometricState) -> np.ndarray:
    """
    Returns the unweighted mean position ``(1/n) sum_i r_i``.

    :param state: Geometric state.
    :type state: GeometricState
    :rtype: numpy.ndarray
    """
    return state.coords.mean(axis=0)


def project_com_free_coords(coords: Coords) -> Coords:
    """Subtracts the per-structure mean over the atom axis (``-2``)."""
    coords = np.asarray(coords, dtype=np.float64)
    return coords - coords.mean(axis=-2, keepdims=True)


def project_com_free(state: GeometricState) -> GeometricState:
    """
    Moves the state so that its center of mass is the origin.

    Pairwise differences are unchanged and the projection is idempotent.

    :param state: Geometric state.
    :type state: GeometricState
    :return: The CoM-free version of ``state``.
    :rtype: GeometricState
    """
    return state.with_coords(project_com_free_coords(state.coords))


def apply_rigid_motion(state: GeometricState, motion: RigidMotion) -> GeometricState:
    """
    Maps every atom ``r_i`` to ``O r_i + t``; atom types are kept.

    :param state: Geometric state.
    :type state: GeometricState
    :param motion: Rigid motion to apply.
    :type motion: RigidMotion
    :rtype: GeometricState
    """
    return state.with_coords(motion.apply(state.coords))


def apply_rotation_only(state: GeometricState, motion: RigidMotion) -> GeometricState:
    """Applies the rotation part of ``motion`` and ignores its translation."""
    return state.with_coords(motion.rotate(state.coords))


def rmsd(coords_a: Coords, coords_b: Coords) -> float:
    """Root mean square deviation between two ``(n, 3)`` arrays, without alignment."""
    diff = np.asarray(coords_a) - np.asarray(coords_b)
    return float(np.sqrt(np.mean(np.sum(diff * diff, axis=-1))))


def kabsch_align(pred: GeometricState,
                 ref: GeometricState) -> tuple[GeometricState, RigidMotion]:
    """
    Superimposes ``pred`` onto ``ref`` with the RMSD-optimal proper rigid motion.

    The rotation comes from the SVD of the covariance of the centered coordinates; the
    sign of the last singular direction is flipped whenever the plain SVD solution
    would be a reflection.

    :param pred: State to move.
    :type pred: GeometricState
    :param ref: Reference state.
    :type ref: GeometricState
    :return: ``pred`` after the motion, and the motion itself.
    :rtype: tuple[GeometricState, RigidMotion]
    :raises AlignmentError: If atom counts or atom types differ.
    """
    if not pred.same_atoms(ref):
        raise AlignmentError(f"cannot align {pred.n_atoms} atoms onto {ref.n_atoms} atoms "
                             "with different atom types or counts")

    pred_com = pred.coords.mean(axis=0)
    ref_com = ref.coords.mean(axis=0)
    p = pred.coords - pred_com
    q = ref.coords - ref_com

    u, _, vt = np.linalg.svd(p.T @ q)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0.0:
        d = 1.0
    rotation = vt.T @ np.diag([1.0, 1.0, d]) @ u.T

    motion = RigidMotion(rotation=rotation, translation=ref_com - rotation @ pred_com)
    return apply_rigid_motion(pred, motion), motion
