# pylint: skip-file
import logging
from dataclasses import replace

import numpy as np
import pytest

from geobridge.errors import ConfigError
from geobridge.potentials import PotentialKind, PotentialSpec
from geobridge.synthdata import DatasetSpec, generate_trajectories, pairs_from_trajectories


SMALL = DatasetSpec(n_records=12, n_atoms=4, N=3, sim_steps_per_segment=20, seed=3,
                    n_atom_types=3)


@pytest.mark.parametrize("overrides", [dict(n_records=0), dict(n_atoms=0), dict(N=0),
                                       dict(sim_dt=0.0), dict(sigma=-1.0),
                                       dict(init_spread=-1.0), dict(n_atom_types=0),
                                       dict(seed=-1)])
def test_spec_validation(overrides):
    with pytest.raises(ConfigError):
        DatasetSpec(**overrides)


def test_total_steps():
    assert DatasetSpec().total_steps == 1000


def test_generation_is_deterministic():
    first = generate_trajectories(SMALL, PotentialSpec())
    second = generate_trajectories(SMALL, PotentialSpec())
    assert len(first) == len(second) == 12
    for a, b in zip(first, second):
        assert np.array_equal(a.coords(), b.coords())
        assert np.array_equal(a.features, b.features)


def test_distinct_seeds_give_distinct_data():
    first = generate_trajectories(SMALL, PotentialSpec())
    other = generate_trajectories(replace(SMALL, seed=4), PotentialSpec())
    assert not np.array_equal(first[0].coords(), other[0].coords())


def test_records_shape_and_com():
    dataset = generate_trajectories(SMALL, PotentialSpec())
    assert dataset.N == 3
    for sample in dataset:
        assert len(sample.frames) == 4
        for frame in sample.frames:
            assert np.array_equal(frame.features, sample.features)
            assert np.allclose(frame.coords.mean(axis=0), 0.0, atol=1e-10)
        assert sample.features.max() < 3


def test_records_do_not_depend_on_chunking():
    many = generate_trajectories(replace(SMALL, n_records=300),
                                 PotentialSpec())
    few = generate_trajectories(SMALL, PotentialSpec())
    for index in range(len(few)):
        assert np.array_equal(many[index].coords(), few[index].coords())


def test_zero_potential_displacement_variance():
    spec = DatasetSpec(n_records=1000, n_atoms=5, N=2, sim_dt=0.01, sim_steps_per_segment=10,
                       sigma=1.0, seed=11)
    dataset = generate_trajectories(spec, PotentialSpec(kind=PotentialKind.ZERO))
    coords = np.stack([sample.coords() for sample in dataset])
    displacements = np.diff(coords, axis=1)
    expected = spec.sigma ** 2 * spec.sim_dt * spec.sim_steps_per_segment * (spec.n_atoms - 1) / spec.n_atoms
    assert np.var(displacements) == pytest.approx(expected, rel=0.05)


def test_diverging_records_are_skipped(caplog):
    spec = DatasetSpec(n_records=3, n_atoms=3, N=2, sim_dt=1.0, sim_steps_per_segment=100)
    with caplog.at_level(logging.WARNING, logger="geobridge.synthdata"):
        dataset = generate_trajectories(spec, PotentialSpec(k=1e6))
    assert len(dataset) == 0
    assert "Skipping record" in caplog.text


def test_pairs_from_trajectories():
    dataset = generate_trajectories(DatasetSpec(n_records=100, n_atoms=3, N=2,
                                                sim_steps_per_segment=5), PotentialSpec())
    pairs = pairs_from_trajectories(dataset)
    assert len(pairs) == 100
    for (start, end), sample in zip(pairs, dataset):
        assert start is sample.frames[0]
        assert end is sample.frames[-1]
        assert np.array_equal(start.features, sample.features)
