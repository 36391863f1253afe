"""Training loop: random answer budgets, episode unrolling, Adam updates.

Each training sample draws its own answer budget ``n_hint`` uniformly from
{0, ..., max_answers_t - 1}, so the model never knows how many questions
it will get to ask and must make each one count. The episode is unrolled
end to end (at most max_answers_t passes, short enough for full
backpropagation through time), the regression loss lands on the final
prediction, and the smoothing loss on every emitted question.

All randomness flows from generators seeded by the config, so identical
configs reproduce identical loss trajectories bit for bit.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .checkpoint import Checkpoint, save_checkpoint
from .colorspace import ColorSpaceSpec
from .data import ImageFolderDataset
from .errors import StateError, ValidationError
from .episode import rollout
from .losses import LossBreakdown, total_loss
from .model import ColorizerNet, ModelConfig, build_model
from .oracle import NoiseConfig, OracleConfig
from .synth import SyntheticSceneSpec, generate_synthetic_batch


@dataclass
class TrainConfig:
    # Cap on forward passes per episode; answered questions per sample are
    # drawn uniformly from {0, ..., max_answers_t - 1}.
    max_answers_t: int = 4
    batch_size: int = 8
    learning_rate: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lambda_seg: float = 0.01
    noise: NoiseConfig = field(default_factory=lambda: NoiseConfig(enabled=True, sigma=0.05))
    steps: int = 20000
    seed: int = 0
    checkpoint_interval: int = 2000
    color_space: str = "lab_ab"
    stop_answer_gradient: bool = False

    def __post_init__(self):
        if self.max_answers_t < 1:
            raise ValidationError("max_answers_t must be >= 1")
        if self.batch_size < 1 or self.steps < 0 or self.checkpoint_interval < 1:
            raise ValidationError("batch_size/steps/checkpoint_interval out of range")
        if self.learning_rate < 0 or self.lambda_seg < 0:
            raise ValidationError("learning_rate and lambda_seg must be >= 0")

    def to_dict(self) -> dict:
        d = {
            "max_answers_t": self.max_answers_t,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "lambda_seg": self.lambda_seg,
            "noise": {
                "enabled": self.noise.enabled,
                "sigma": self.noise.sigma,
                "seed": self.noise.seed,
            },
            "steps": self.steps,
            "seed": self.seed,
            "checkpoint_interval": self.checkpoint_interval,
            "color_space": self.color_space,
            "stop_answer_gradient": self.stop_answer_gradient,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        noise = d.pop("noise", None)
        cfg = cls(**d)
        if noise is not None:
            cfg.noise = NoiseConfig(**noise)
        return cfg


def sample_n_hint(config: TrainConfig, generator: torch.Generator) -> int:
    """Answer budget for one training sample: uniform over {0..T-1}."""
    return int(torch.randint(0, config.max_answers_t, (1,), generator=generator))


def _sample_n_hints(config: TrainConfig, batch: int, generator: torch.Generator) -> torch.Tensor:
    return torch.randint(0, config.max_answers_t, (batch,), generator=generator)


def train_step(
    model: ColorizerNet,
    optimizer: torch.optim.Optimizer,
    batch: tuple[torch.Tensor, torch.Tensor],
    config: TrainConfig,
    generator: torch.Generator,
) -> LossBreakdown:
    """One optimizer update over a batch with per-sample answer budgets.

    Samples sharing a budget are rolled out together; the per-group losses
    are combined weighted by group size, so the step is equivalent to
    averaging per-sample objectives.
    """
    x, y = batch
    n_hints = _sample_n_hints(config, x.shape[0], generator)
    oracle_cfg = OracleConfig(
        noise=config.noise,
        stop_gradient=config.stop_answer_gradient,
        generator=generator,
    )
    reg_acc = torch.zeros(())
    seg_acc = torch.zeros(())
    loss_acc = torch.zeros(())
    for n in sorted(set(n_hints.tolist())):
        idx = (n_hints == n).nonzero(as_tuple=True)[0]
        prediction, state = rollout(x[idx], y[idx], n, model, oracle_cfg)
        lb = total_loss(prediction, y[idx], state.question_history, config.lambda_seg)
        weight = idx.numel() / x.shape[0]
        reg_acc = reg_acc + weight * lb.reg_loss
        seg_acc = seg_acc + weight * lb.seg_loss
        loss_acc = loss_acc + weight * lb.total
    optimizer.zero_grad()
    loss_acc.backward()
    optimizer.step()
    return LossBreakdown(
        reg_loss=reg_acc.detach(),
        seg_loss=seg_acc.detach(),
        lambda_seg=config.lambda_seg,
        total=loss_acc.detach(),
    )


@dataclass
class TrainResult:
    model: ColorizerNet
    checkpoint_path: Path | None
    loss_log: list[dict]
    model_config: ModelConfig
    train_config: TrainConfig


def _batches_from_source(
    source, config: TrainConfig, model_config: ModelConfig
):
    """Yield (x, y) batches forever from a scene spec or an image folder."""
    if isinstance(source, SyntheticSceneSpec):
        rng = np.random.default_rng(config.seed)
        while True:
            x, y, _ = generate_synthetic_batch(source, config.batch_size, rng)
            yield x, y
    elif isinstance(source, ImageFolderDataset):
        gen = torch.Generator().manual_seed(config.seed + 1)
        items = [source[i] for i in range(len(source))]
        xs = torch.stack([it.input_x for it in items])
        ys = torch.stack([it.target_y for it in items])
        while True:
            idx = torch.randint(0, len(items), (config.batch_size,), generator=gen)
            yield xs[idx], ys[idx]
    else:
        raise ValidationError(f"unsupported data source {type(source).__name__}")


def train_loop(
    config: TrainConfig,
    model_config: ModelConfig,
    data_source,
    out_dir: str | os.PathLike | None = None,
    callbacks: Sequence[Callable[[int, LossBreakdown], None]] = (),
) -> TrainResult:
    """Run the full loop: periodic checkpoints, CSV-ready loss telemetry.

    ``data_source`` is a SyntheticSceneSpec (fresh scenes every step) or an
    ImageFolderDataset (sampled with replacement). Aborts on a non-finite
    loss with the offending step in the message.
    """
    expected_k = ColorSpaceSpec(config.color_space).color_channels
    if model_config.color_channels != expected_k:
        raise ValidationError(
            f"model predicts {model_config.color_channels} channels but color space "
            f"{config.color_space!r} has {expected_k}"
        )
    model = build_model(model_config)
    optimizer = torch.optim.Adam(
        model.parameters(),
        lr=config.learning_rate,
        betas=(config.beta1, config.beta2),
        eps=config.adam_eps,
    )
    gen = torch.Generator().manual_seed(config.seed)
    batches = _batches_from_source(data_source, config, model_config)
    loss_log: list[dict] = []
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    snapshot = config.to_dict()

    final_path = None
    for step in range(1, config.steps + 1):
        batch = next(batches)
        breakdown = train_step(model, optimizer, batch, config, gen)
        row = {"step": step, **breakdown.scalars()}
        if not np.isfinite(row["total"]):
            raise StateError(
                f"non-finite loss at step {step} (seed {config.seed}): {row}"
            )
        loss_log.append(row)
        for cb in callbacks:
            cb(step, breakdown)
        if out is not None and (step % config.checkpoint_interval == 0 or step == config.steps):
            path = out / f"ckpt_{step:06d}.ckpt"
            save_checkpoint(model, path, train_config=snapshot, step_count=step)
            final_path = path
    if out is not None:
        final_path = out / "model.ckpt"
        save_checkpoint(model, final_path, train_config=snapshot, step_count=config.steps)
    return TrainResult(
        model=model,
        checkpoint_path=final_path,
        loss_log=loss_log,
        model_config=model_config,
        train_config=config,
    )


def write_loss_csv(loss_log: list[dict], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["step", "reg_loss", "seg_loss", "lambda_seg", "total"])
        writer.writeheader()
        for row in loss_log:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
