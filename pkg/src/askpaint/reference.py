"""The documented desk-scale reference setup.

One place defines the toy training configuration every acceptance check
runs against: 32x32 synthetic scenes with 2-4 shapes, up to 4 forward
passes per episode, and the default smoothing/noise settings. Trained
checkpoints are cached under a content-keyed filename so repeated test
runs skip the (minutes-long) training.

Run ``python -m askpaint.reference CACHE_DIR [--no-noise]`` to materialize
a checkpoint from another process (the browser client's live test does
this); the path is printed on stdout.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .data import DatasetItem, synthetic_eval_items
from .model import ModelConfig
from .oracle import NoiseConfig
from .synth import SyntheticSceneSpec
from .training import TrainConfig, train_loop

REFERENCE_STEPS = 12000
HELDOUT_SEED = 20405


def reference_model_config() -> ModelConfig:
    return ModelConfig(image_size=(32, 32), color_channels=2, depth=3, base_width=16, seed=11)


def reference_scene_spec() -> SyntheticSceneSpec:
    return SyntheticSceneSpec(seed=0)


def reference_train_config(noise_enabled: bool = True, steps: int = REFERENCE_STEPS) -> TrainConfig:
    # sigma and learning rate were calibrated during bring-up: below
    # sigma ~0.1 the model can still decode mixed-region answers and never
    # learns to focus its questions at this scale
    return TrainConfig(
        max_answers_t=4,
        batch_size=8,
        learning_rate=3e-4,
        lambda_seg=0.01,
        noise=NoiseConfig(enabled=noise_enabled, sigma=0.12, seed=0),
        steps=steps,
        seed=23,
        checkpoint_interval=2000,
        color_space="lab_ab",
    )


def heldout_items(count: int = 500) -> list[DatasetItem]:
    """Evaluation scenes drawn from a stream disjoint from training's."""
    return synthetic_eval_items(reference_scene_spec(), count, np.random.default_rng(HELDOUT_SEED))


def _config_key(noise_enabled: bool, steps: int) -> str:
    payload = {
        "model": reference_model_config().to_dict(),
        "train": reference_train_config(noise_enabled, steps).to_dict(),
        "scenes": reference_scene_spec().to_dict(),
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def reference_checkpoint_path(cache_dir: str | os.PathLike, noise_enabled: bool = True, steps: int = REFERENCE_STEPS) -> Path:
    tag = "noise" if noise_enabled else "nonoise"
    return Path(cache_dir) / f"reference_{tag}_{_config_key(noise_enabled, steps)}.ckpt"


def ensure_reference_checkpoint(
    cache_dir: str | os.PathLike,
    noise_enabled: bool = True,
    steps: int = REFERENCE_STEPS,
    verbose: bool = False,
) -> Path:
    """Train (once) and cache the reference checkpoint; return its path."""
    path = reference_checkpoint_path(cache_dir, noise_enabled, steps)
    if path.exists():
        return path
    path.parent.mkdir(parents=True, exist_ok=True)
    config = reference_train_config(noise_enabled, steps)
    callbacks = []
    if verbose:
        callbacks.append(
            lambda step, lb: (step % 500 == 0)
            and print(f"  step {step}/{config.steps} total={float(lb.total):.5f}", file=sys.stderr)
        )
    result = train_loop(config, reference_model_config(), reference_scene_spec(), callbacks=callbacks)
    save_checkpoint(result.model, path, train_config=config.to_dict(), step_count=config.steps)
    return path


def main(argv: list[str] | None = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    noise = True
    if "--no-noise" in args:
        noise = False
        args.remove("--no-noise")
    if len(args) != 1:
        print("usage: python -m askpaint.reference CACHE_DIR [--no-noise]", file=sys.stderr)
        return 1
    path = ensure_reference_checkpoint(args[0], noise_enabled=noise, verbose=True)
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
