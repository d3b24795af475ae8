# pylint: skip-file
import pytest

from geobridge import RunConfig
from geobridge.errors import ConfigError
from geobridge.potentials import PotentialKind
from geobridge.run_config import SEED_ENV
from geobridge.train_config import LambdaSchedule, TrainMode


def test_defaults_are_valid():
    config = RunConfig().validate()
    assert config.schedule().N == 10
    assert config.sampler_config().steps_per_segment == 10
    assert config.train_config().grad_clip_norm == 10.0
    assert config.dataset_spec().sigma == config.sigma


def test_text_round_trip():
    config = RunConfig(sigma=0.25, t_clip=0.01, use_condition=False,
                       lambda_schedule=LambdaSchedule.CONSTANT_ONE,
                       potential_kind=PotentialKind.ZERO, segment_counts=(1, 3),
                       train_mode=TrainMode.PAIRS)
    text = config.to_text()
    assert "use_condition = 0\n" in text
    assert "segment_counts = 1,3\n" in text
    assert "t_clip = 0.01\n" in text
    assert RunConfig.from_text(text) == config
    assert RunConfig.from_text(RunConfig().to_text()) == RunConfig()


def test_parsing_comments_and_types():
    config = RunConfig.from_text("""
        # a toy run
        N = 3          # segments
        sigma = 1.5
        use_condition = false
        t_clip = none
        noise_schedule = smoothed_initial
    """)
    assert config.N == 3
    assert config.sigma == 1.5
    assert config.use_condition is False
    assert config.t_clip is None
    assert config.noise_schedule.value == "smoothed_initial"


@pytest.mark.parametrize("text, key", [("bogus = 1", "bogus"),
                                       ("N = 2\nN = 3", "N"),
                                       ("N = 2.5", "N"),
                                       ("use_condition = maybe", "use_condition"),
                                       ("lambda_schedule = cubic", "lambda_schedule"),
                                       ("segment_counts = 1,x", "segment_counts"),
                                       ("sigma = -1", "sigma"),
                                       ("segment_counts = 4,2", "segment_counts"),
                                       ("steps_per_segment = 0", "steps_per_segment"),
                                       ("time_embed_dim = 7", "time_embed_dim"),
                                       ("seed = -1", "seed"),
                                       ("model_seed = -2", "model_seed")])
def test_invalid_configs_name_the_key(text, key):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_text(text)
    assert key in str(info.value)


def test_malformed_line():
    with pytest.raises(ConfigError):
        RunConfig.from_text("N 3")


def test_atom_types_must_fit_the_embedding():
    with pytest.raises(ConfigError):
        RunConfig(n_atom_types=20, max_atom_types=16).validate()


def test_seed_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 4\n", encoding="utf-8")
    assert RunConfig.load(path, environ={}).seed == 4
    assert RunConfig.load(path, environ={SEED_ENV: "9"}).seed == 9
    with pytest.raises(ConfigError):
        RunConfig.load(path, environ={SEED_ENV: "nine"})
    with pytest.raises(ConfigError):
        RunConfig.load(path, environ={SEED_ENV: "-5"})
