"""
Command line entry point.

Commands: ``gen-data``, ``train``, ``sample``, ``eval`` and ``kl-study``. Exit status
is 0 on success, 2 for configuration and usage errors, 3 for unreadable, malformed
or incompatible input and 4 for numerical divergence.
"""
import json
import logging
import sys
from argparse import Namespace
from dataclasses import replace
from logging import getLogger
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from .bridge_schedule import BridgeSchedule
from .command_router import CommandRouter, argument
from .errors import ConfigError, FormatError, GeoBridgeError, InputError, NumericalError
from .formats import Checkpoint, TrajectoryFile
from .geometric_state import GeometricState
from .metrics import evaluate
from .oracles import girsanov_kl_study
from .run_config import RunConfig
from .sampler_config import SamplerConfig
from .sampling import sample_chain_batch
from .score_model import ScoreModel, load_parameter_arrays, parameter_arrays
from .synthdata import generate_trajectories, pairs_from_trajectories
from .train_config import TrainMode
from .training import Trainer


__all__ = ["main", "router"]


logger = getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

router = CommandRouter(prog="geobridge",
                       description="Geometric diffusion bridges for structure prediction.")
router.add_global(
    argument("--log-level", default="INFO",
             choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
             help="Logging level on standard error."),
    argument("--threads", type=int, default=1,
             help="Torch intra-op threads; 1 keeps runs bit-reproducible."),
)


def _check_atom_types(features: np.ndarray, cfg: RunConfig):
    if features.size and int(features.max()) >= cfg.max_atom_types:
        raise InputError(f"atom id {int(features.max())} exceeds max_atom_types="
                         f"{cfg.max_atom_types}")


@router.command("gen-data",
                argument("config", help="Run config file."),
                argument("out", help="Output trajectory file."),
                help="Simulate synthetic relaxation trajectories.")
def cmd_gen_data(args: Namespace) -> int:
    """Writes a trajectory file and prints the record and skip counts."""
    cfg = RunConfig.load(args.config)
    dataset = generate_trajectories(cfg.dataset_spec(), cfg.potential_spec())
    TrajectoryFile.from_dataset(dataset, sigma=cfg.sigma, n_atoms=cfg.n_atoms).write(args.out)
    print(f"records {len(dataset)} skipped {cfg.n_records - len(dataset)}")
    return EXIT_OK


@router.command("train",
                argument("config", help="Run config file."),
                argument("data", help="Training trajectory file."),
                argument("out", help="Output checkpoint."),
                argument("--mode", choices=[mode.value for mode in TrainMode],
                         help="Training algorithm; defaults to the config's train_mode."),
                argument("--loss-log", help="Loss log to append to; default <out>.loss."),
                help="Train the score model.")
def cmd_train(args: Namespace) -> int:
    """Trains, appends the loss trace and writes the checkpoint."""
    cfg = RunConfig.load(args.config)
    if args.mode is not None:
        cfg = replace(cfg, train_mode=TrainMode(args.mode))
    data = TrajectoryFile.read(args.data)
    _check_atom_types(data.features, cfg)
    trajectories = data.to_dataset()
    if cfg.train_mode == TrainMode.PAIRS:
        dataset = pairs_from_trajectories(trajectories)
    else:
        if data.N != cfg.N:
            raise ConfigError(f"data has N={data.N} segments, config has N={cfg.N}")
        dataset = trajectories

    model = ScoreModel(cfg.model_config())
    trainer = Trainer(model, cfg.train_config(), cfg.schedule())
    loss_log = Path(args.loss_log or f"{args.out}.loss")
    with loss_log.open("a", encoding="utf-8") as log_stream:
        losses = trainer.fit(dataset, cfg.train_mode, loss_log=log_stream)

    Checkpoint(config_text=cfg.to_text(), arrays=parameter_arrays(model)).write(args.out)
    if losses:
        print(f"steps {len(losses)} final_loss {losses[-1]!r}")
    return EXIT_OK


@router.command("sample",
                argument("checkpoint", help="Trained checkpoint."),
                argument("input", help="Trajectory file; frame 0 of each record is the start."),
                argument("out", help="Output trajectory file."),
                argument("--steps", type=int, help="Euler steps per segment."),
                argument("--chain", action="store_true",
                         help="Write every segment boundary instead of the final state."),
                help="Predict target structures with the Euler ODE sampler.")
def cmd_sample(args: Namespace) -> int:
    """Writes one prediction (N = 0) or the whole chain per input record."""
    checkpoint = Checkpoint.read(args.checkpoint)
    cfg = RunConfig.from_text(checkpoint.config_text)
    model = ScoreModel(cfg.model_config())
    load_parameter_arrays(model, checkpoint.arrays)
    model.eval()

    data = TrajectoryFile.read(args.input)
    _check_atom_types(data.features, cfg)
    sched = cfg.schedule()
    if cfg.train_mode == TrainMode.PAIRS:
        sched = BridgeSchedule(sigma=cfg.sigma, T=cfg.T, N=1)
    sampler = SamplerConfig(sched=sched,
                            steps_per_segment=(cfg.steps_per_segment if args.steps is None
                                               else args.steps),
                            drift_scaling=cfg.drift_scaling)
    if data.n_records:
        frames = np.swapaxes(sample_chain_batch(model, data.coords[:, 0], data.features, sampler),
                             0, 1)
    else:
        frames = np.zeros((0, sched.N + 1, data.n_atoms, 3))
    if not args.chain:
        frames = frames[:, -1:]
    TrajectoryFile(coords=frames, features=data.features, sigma=cfg.sigma).write(args.out)
    return EXIT_OK


def _frames(data: TrajectoryFile, frame: int = -1) -> list[GeometricState]:
    return [GeometricState(coords=coords[frame], features=features)
            for coords, features in zip(data.coords, data.features)]


@router.command("eval",
                argument("ref", help="Reference trajectory file; its last frames are targets."),
                argument("pred", nargs="?", help="Prediction trajectory file."),
                argument("--json", action="store_true", help="Emit a JSON object."),
                argument("--aligned", action="store_true",
                         help="Align predictions before computing ADwT."),
                argument("--baseline", action="store_true",
                         help="Score the first reference frames as predictions."),
                help="Compare predictions with reference structures.")
def cmd_eval(args: Namespace) -> int:
    """Prints the metric report as ``key = value`` lines or JSON."""
    ref = TrajectoryFile.read(args.ref)
    if args.baseline:
        preds = _frames(ref, frame=0)
    elif args.pred is None:
        raise ConfigError("eval needs a prediction file unless --baseline is given")
    else:
        preds = _frames(TrajectoryFile.read(args.pred))
    refs = _frames(ref)
    report = evaluate(preds, refs, aligned=args.aligned)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2))
    else:
        for key, value in report.as_dict().items():
            print(f"{key} = {value!r}")
    return EXIT_OK


@router.command("kl-study",
                argument("config", help="Run config file."),
                argument("out", help="Output table."),
                help="Estimate OU-bridge to Brownian-bridge KL per segment count.")
def cmd_kl_study(args: Namespace) -> int:
    """Writes one ``N mean_kl stderr max_kl`` line per segment count."""
    cfg = RunConfig.load(args.config)
    rows = girsanov_kl_study(cfg.ou_spec(), cfg.kl_study_config(),
                             np.random.default_rng(cfg.seed))
    lines = ["# N mean_kl stderr max_kl\n"]
    lines.extend(f"{row.N} {row.mean_kl!r} {row.stderr!r} {row.max_kl!r}\n" for row in rows)
    Path(args.out).write_text("".join(lines), encoding="utf-8")
    logger.info("Wrote KL table with %d rows to %s", len(rows), args.out)
    return EXIT_OK


def _configure_runtime(args: Namespace):
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
    if args.threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {args.threads}")
    torch.set_num_threads(args.threads)
    torch.use_deterministic_algorithms(True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs one command and maps failures onto exit codes.

    :param argv: Arguments without the program name; defaults to ``sys.argv[1:]``.
    :return: Exit status.
    :rtype: int
    """
    try:
        args = router.parse(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    try:
        _configure_runtime(args)
        return router.dispatch(args)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error("numerical failure: %s", e)
        return EXIT_NUMERICAL
    except (FormatError, OSError, GeoBridgeError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_IO
