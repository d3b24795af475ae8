# pylint: skip-file
import numpy as np
import pytest
import torch

from geobridge import (BridgeSchedule, DriftScaling, GeometricState, ModelConfig, RigidMotion,
                       SamplerConfig, ScoreModel, sample_bridge, sample_chain)
from geobridge.errors import ConfigError, DivergenceError
from geobridge.geom import apply_rigid_motion
from geobridge.sampling import sample_bridge_batch, sample_chain_batch


class ChainOracle:
    """Exact bridge score toward known segment end states."""
    def __init__(self, targets, sched):
        self.targets = torch.as_tensor(np.asarray(targets), dtype=torch.float64)
        self.sched = sched

    def __call__(self, r_t, r_0, features, t):
        segment = int(torch.floor(t[0] / self.sched.T).item())
        t_local = t[0] - segment * self.sched.T
        sigma = (self.sched.N - segment) / self.sched.N * self.sched.sigma
        return (self.targets[segment] - r_t) / (sigma ** 2 * (self.sched.T - t_local))


def equivariant_oracle(r_t, r_0, features, t):
    centered = r_t - r_t.mean(dim=1, keepdim=True)
    return 0.5 * (r_0 - r_t) + 0.2 * t[:, None, None] * centered


def state(rng, n_atoms=4):
    return GeometricState(rng.normal(size=(n_atoms, 3)), np.zeros(n_atoms, dtype=int))


def test_sampler_config_validation():
    with pytest.raises(ConfigError):
        SamplerConfig(sched=BridgeSchedule(1.0), steps_per_segment=0)


def test_oracle_bridge_hits_target(rng):
    z0 = state(rng)
    z1 = rng.normal(size=(4, 3))
    sched = BridgeSchedule(sigma=0.5)
    cfg = SamplerConfig(sched=sched, steps_per_segment=10_000)
    result = sample_bridge(ChainOracle(z1[None], sched), z0, cfg)
    assert np.linalg.norm(result.coords - z1) <= 1e-3 * np.linalg.norm(z1 - z0.coords)


def test_literal_scaling_misses_target_for_large_sigma(rng):
    z0 = state(rng)
    z1 = rng.normal(size=(4, 3))
    sched = BridgeSchedule(sigma=2.0)
    literal = SamplerConfig(sched=sched, steps_per_segment=100,
                            drift_scaling=DriftScaling.LITERAL)
    result = sample_bridge(ChainOracle(z1[None], sched), z0, literal)
    assert np.linalg.norm(result.coords - z1) > 0.1 * np.linalg.norm(z1 - z0.coords)


def test_sampling_is_deterministic(rng):
    model = ScoreModel(ModelConfig(seed=5))
    model.reset_parameters(5, zero_gates=False)
    z0 = state(rng)
    cfg = SamplerConfig(sched=BridgeSchedule(sigma=0.5, N=3))
    first = sample_chain(model, z0, cfg)
    second = sample_chain(model, z0, cfg)
    for a, b in zip(first, second):
        assert np.array_equal(a.coords, b.coords)


def test_equivariant_oracle_commutes_with_motions(rng):
    z0 = state(rng)
    motion = RigidMotion.random(rng, translation_scale=2.0)
    cfg = SamplerConfig(sched=BridgeSchedule(sigma=0.5), steps_per_segment=20)
    moved = sample_bridge(equivariant_oracle, apply_rigid_motion(z0, motion), cfg)
    expected = apply_rigid_motion(sample_bridge(equivariant_oracle, z0, cfg), motion)
    assert np.allclose(moved.coords, expected.coords, atol=1e-8)


def test_single_segment_chain_matches_bridge(rng):
    model = ScoreModel(ModelConfig(seed=6))
    model.reset_parameters(6, zero_gates=False)
    z0 = state(rng)
    cfg = SamplerConfig(sched=BridgeSchedule(sigma=0.5, N=1))
    chain = sample_chain(model, z0, cfg)
    assert len(chain) == 2
    assert chain[0] is z0
    assert np.array_equal(chain[1].coords, sample_bridge(model, z0, cfg).coords)


def test_chain_length_and_stitching(rng):
    z0 = state(rng)
    targets = rng.normal(size=(2, 4, 3))
    sched = BridgeSchedule(sigma=0.5, N=2)
    cfg = SamplerConfig(sched=sched, steps_per_segment=1000)
    chain = sample_chain(ChainOracle(targets, sched), z0, cfg)
    assert len(chain) == 3
    assert np.array_equal(chain[0].coords, z0.coords)
    assert np.allclose(chain[1].coords, targets[0], atol=1e-3)
    assert np.allclose(chain[2].coords, targets[1], atol=1e-3)


def test_batch_sampling_shapes_and_com(rng):
    model = ScoreModel(ModelConfig(seed=7))
    model.reset_parameters(7, zero_gates=False)
    z0 = rng.normal(size=(5, 4, 3))
    features = np.zeros((5, 4), dtype=int)
    cfg = SamplerConfig(sched=BridgeSchedule(sigma=0.5, N=3), steps_per_segment=4)
    frames = sample_chain_batch(model, z0, features, cfg)
    assert frames.shape == (4, 5, 4, 3)
    assert np.array_equal(frames[0], z0)
    assert np.allclose(frames.mean(axis=2), z0.mean(axis=1)[None], atol=1e-10)
    final = sample_bridge_batch(model, z0, features, cfg)
    assert final.shape == (5, 4, 3)


def test_divergence_reports_step(rng):
    def exploding(r_t, r_0, features, t):
        return torch.full_like(r_t, float("inf"))

    cfg = SamplerConfig(sched=BridgeSchedule(sigma=0.5, N=2))
    with pytest.raises(DivergenceError) as info:
        sample_chain(exploding, state(rng), cfg)
    assert info.value.step == 0
