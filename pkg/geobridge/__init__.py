"""
Geometric diffusion bridges

Score-based models that carry one 3-D atomic structure to another along a Brownian
bridge, or along a chain of bridges when intermediate trajectory frames are known.
The pipeline respects rigid motions: noise is CoM-free and the vector field network
is SE(3)-equivariant.

Classes:
- GeometricState: Atom positions with atom types.
- RigidMotion: Rotation plus translation acting on states.
- BridgeConfig / BridgeSchedule: Parameters of one bridge and of a chain of bridges.
- ScoreModel: Equivariant network predicting the bridge score.
- Trainer: Training loop over endpoint pairs or trajectories.
- SamplerConfig: Settings of the deterministic Euler sampler.
- RunConfig: Flat text configuration used by the command line.

The command line lives in :mod:`geobridge.cli`.
"""
from .bridge_config import BridgeConfig
from .bridge_schedule import BridgeSchedule, SegmentTime
from .datasets import PairDataset, TrajectoryDataset, TrajectorySample
from .geometric_state import GeometricState
from .metrics import MetricReport, evaluate
from .model_config import ModelConfig
from .rigid_motion import RigidMotion
from .run_config import RunConfig
from .sampler_config import DriftScaling, SamplerConfig
from .sampling import sample_bridge, sample_chain
from .score_model import ScoreModel
from .train_config import LambdaSchedule, NoiseSchedule, TrainConfig, TrainMode
from .training import Trainer
