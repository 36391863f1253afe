"""Question-driven interactive colorization.

The model colorizes an image over several forward passes. After each pass
it emits a soft question heatmap; the answer (the average ground-truth
color of that region, or a human-chosen color) is broadcast back as a
hint for the next pass.
"""

from .colorspace import ColorSpaceSpec, lab_to_srgb, srgb_to_lab
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .episode import EpisodeState, advance, init_episode, rollout
from .losses import LossBreakdown, reg_loss, smooth_loss, total_loss
from .model import ColorizerNet, ModelConfig, build_model
from .oracle import (
    NoiseConfig,
    OracleConfig,
    broadcast_hint,
    compute_answer,
    perturb_answer,
)
from .synth import SyntheticSceneSpec, generate_scene, generate_synthetic_batch
from .training import TrainConfig, sample_n_hint, train_loop, train_step

__all__ = [
    "Checkpoint",
    "ColorSpaceSpec",
    "ColorizerNet",
    "EpisodeState",
    "LossBreakdown",
    "ModelConfig",
    "NoiseConfig",
    "OracleConfig",
    "SyntheticSceneSpec",
    "TrainConfig",
    "advance",
    "broadcast_hint",
    "build_model",
    "compute_answer",
    "generate_scene",
    "generate_synthetic_batch",
    "init_episode",
    "lab_to_srgb",
    "load_checkpoint",
    "perturb_answer",
    "reg_loss",
    "rollout",
    "sample_n_hint",
    "save_checkpoint",
    "smooth_loss",
    "srgb_to_lab",
    "total_loss",
    "train_loop",
    "train_step",
]
