# pylint: skip-file
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.distance import pdist
from scipy.spatial.transform import Rotation

from geobridge import GeometricState, RigidMotion
from geobridge.errors import AlignmentError, StateError
from geobridge.geom import (apply_rigid_motion, apply_rotation_only, center_of_mass,
                            kabsch_align, project_com_free, rmsd)


def motions():
    return st.integers(min_value=0, max_value=2 ** 32 - 1).map(
        lambda seed: RigidMotion.random(np.random.default_rng(seed), translation_scale=3.0))


def states(n_atoms=5):
    return st.integers(min_value=0, max_value=2 ** 32 - 1).map(
        lambda seed: GeometricState(coords=np.random.default_rng(seed).normal(size=(n_atoms, 3)),
                                    features=np.arange(n_atoms) % 3))


def test_state_validation():
    with pytest.raises(StateError):
        GeometricState(coords=np.zeros((0, 3)), features=np.zeros(0, dtype=int))
    with pytest.raises(StateError):
        GeometricState(coords=np.zeros((2, 2)), features=np.zeros(2, dtype=int))
    with pytest.raises(StateError):
        GeometricState(coords=[[0, 0, np.nan]], features=[0])
    with pytest.raises(StateError):
        GeometricState(coords=np.zeros((2, 3)), features=[0])
    with pytest.raises(StateError):
        GeometricState(coords=np.zeros((1, 3)), features=[-1])


def test_state_is_read_only():
    state = GeometricState(coords=np.zeros((2, 3)), features=[0, 1])
    with pytest.raises(ValueError):
        state.coords[0, 0] = 1.0


def test_rigid_motion_rejects_reflection():
    with pytest.raises(StateError):
        RigidMotion(rotation=np.diag([1.0, 1.0, -1.0]), translation=np.zeros(3))
    with pytest.raises(StateError):
        RigidMotion(rotation=2 * np.eye(3), translation=np.zeros(3))


def test_center_of_mass():
    single = GeometricState(coords=[[1.0, 2.0, 3.0]], features=[0])
    assert np.array_equal(center_of_mass(single), [1.0, 2.0, 3.0])
    pair = GeometricState(coords=[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]], features=[0, 0])
    assert np.array_equal(center_of_mass(pair), [1.0, 0.0, 0.0])


def test_center_of_mass_rotates(make_state, rng):
    state = make_state()
    motion = RigidMotion.random(rng)
    moved = apply_rigid_motion(state, motion)
    assert np.allclose(center_of_mass(moved), motion.apply(center_of_mass(state)), atol=1e-12)


def test_project_com_free():
    pair = GeometricState(coords=[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]], features=[0, 0])
    centered = project_com_free(pair)
    assert np.array_equal(centered.coords, [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    again = project_com_free(centered)
    assert np.array_equal(again.coords, centered.coords)
    shifted = apply_rigid_motion(centered, RigidMotion(np.eye(3), [3.0, -1.0, 2.0]))
    assert np.allclose(project_com_free(shifted).coords, centered.coords, atol=1e-12)


def test_project_com_free_keeps_differences(make_state):
    state = make_state(n_atoms=6, scale=5.0)
    centered = project_com_free(state)
    assert np.allclose(centered.coords.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(pdist(centered.coords), pdist(state.coords), atol=1e-12)


def test_apply_rigid_motion_basics(make_state):
    state = make_state()
    same = apply_rigid_motion(state, RigidMotion.identity())
    assert np.array_equal(same.coords, state.coords)
    atom = GeometricState(coords=[[0.0, 0.0, 0.0]], features=[4])
    moved = apply_rigid_motion(atom, RigidMotion(np.eye(3), [1.0, 0.0, 0.0]))
    assert np.array_equal(moved.coords, [[1.0, 0.0, 0.0]])
    assert np.array_equal(moved.features, [4])


@given(states(), motions(), motions())
@settings(max_examples=50, deadline=None)
def test_compose_matches_sequential(state, first, second):
    once = apply_rigid_motion(state, second.compose(first))
    twice = apply_rigid_motion(apply_rigid_motion(state, first), second)
    assert np.allclose(once.coords, twice.coords, atol=1e-12)


@given(states(), motions())
@settings(max_examples=50, deadline=None)
def test_translation_absorbed_by_projection(state, motion):
    left = project_com_free(apply_rigid_motion(state, motion))
    right = apply_rotation_only(project_com_free(state), motion)
    assert np.allclose(left.coords, right.coords, atol=1e-10)


@given(states(), motions())
@settings(max_examples=50, deadline=None)
def test_rigid_motion_preserves_distances(state, motion):
    moved = apply_rigid_motion(state, motion)
    assert np.allclose(pdist(moved.coords), pdist(state.coords), atol=1e-10)


def test_kabsch_identity(make_state):
    state = make_state()
    aligned, motion = kabsch_align(state, state)
    assert np.allclose(motion.rotation, np.eye(3), atol=1e-12)
    assert np.allclose(aligned.coords, state.coords, atol=1e-12)


@given(states(), motions())
@settings(max_examples=50, deadline=None)
def test_kabsch_recovers_rigid_copy(state, motion):
    moved = apply_rigid_motion(state, motion)
    aligned, _ = kabsch_align(moved, state)
    assert np.allclose(aligned.coords, state.coords, atol=1e-10)


def test_kabsch_mismatch():
    a = GeometricState(coords=np.zeros((3, 3)), features=[0, 0, 0])
    b = GeometricState(coords=np.zeros((4, 3)), features=[0, 0, 0, 0])
    with pytest.raises(AlignmentError):
        kabsch_align(a, b)
    c = GeometricState(coords=np.zeros((3, 3)), features=[0, 0, 1])
    with pytest.raises(AlignmentError):
        kabsch_align(a, c)


def test_kabsch_corrects_reflection_on_near_planar_case():
    ref = GeometricState(coords=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                                 [-1.0, 0.0, 0.0], [0.0, -1.0, 0.05]],
                         features=[0, 0, 0, 0])
    # mirror image: the unconstrained SVD solution is a reflection
    pred = ref.with_coords(ref.coords * np.array([1.0, 1.0, -1.0]))
    aligned, motion = kabsch_align(pred, ref)
    assert np.linalg.det(motion.rotation) == pytest.approx(1.0, abs=1e-12)

    best = aligned_rmsd = rmsd(aligned.coords, ref.coords)
    p = pred.coords - pred.coords.mean(axis=0)
    q = ref.coords - ref.coords.mean(axis=0)
    for rotation in Rotation.random(20000, random_state=7).as_matrix():
        best = min(best, rmsd(p @ rotation.T, q))
    assert aligned_rmsd <= best + 1e-3


def test_kabsch_beats_random_motions(make_state, rng):
    pred = make_state(n_atoms=6)
    ref = make_state(n_atoms=6)
    aligned, _ = kabsch_align(pred, ref)
    optimum = rmsd(aligned.coords, ref.coords)
    q = ref.coords - ref.coords.mean(axis=0)
    p = pred.coords - pred.coords.mean(axis=0)
    for rotation in Rotation.random(10000, random_state=rng).as_matrix():
        assert optimum <= rmsd(p @ rotation.T, q) + 1e-12
