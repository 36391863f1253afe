"""Training objective: color regression plus question smoothing.

The regression term penalizes the final prediction only; the smoothing
term penalizes neighbor differences in every question map the episode
emitted, which keeps questions spatially coherent instead of speckled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import torch

from .errors import ValidationError


@dataclass
class LossBreakdown:
    """Components of one objective evaluation. Tensors are 0-dim."""

    reg_loss: torch.Tensor
    seg_loss: torch.Tensor
    lambda_seg: float
    total: torch.Tensor

    def scalars(self) -> dict[str, float]:
        return {
            "reg_loss": float(self.reg_loss),
            "seg_loss": float(self.seg_loss),
            "lambda_seg": self.lambda_seg,
            "total": float(self.total),
        }


def reg_loss(prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean over pixels of the channel-summed squared error.

    For a (K, H, W) pair this is sum_kij((p - y)^2) / (H * W): channels are
    summed, pixels averaged. Leading batch dimensions are averaged.
    """
    if prediction.shape != target.shape:
        raise ValidationError(
            f"prediction shape {tuple(prediction.shape)} does not match "
            f"target {tuple(target.shape)}"
        )
    h, w = prediction.shape[-2:]
    per_sample = ((prediction - target) ** 2).sum(dim=(-3, -2, -1)) / (h * w)
    return per_sample.mean()


def smooth_loss(questions: Sequence[torch.Tensor]) -> torch.Tensor:
    """Anisotropic total variation of the question maps, summed over maps.

    For each map, |q[i][j] - q[i-1][j]| + |q[i][j] - q[i][j-1]| is summed
    wherever both operands are in bounds; the grand total is divided by
    H * W once. An empty sequence costs nothing.
    """
    if len(questions) == 0:
        return torch.tensor(0.0)
    shape = questions[0].shape
    for q in questions[1:]:
        if q.shape != shape:
            raise ValidationError("all question maps must share one shape")
    h, w = shape[-2:]
    total = questions[0].new_zeros(())
    n_batch = math.prod(shape[:-2]) if len(shape) > 2 else 1
    for q in questions:
        dv = (q[..., 1:, :] - q[..., :-1, :]).abs().sum()
        dh = (q[..., :, 1:] - q[..., :, :-1]).abs().sum()
        total = total + dv + dh
    return total / (h * w * n_batch)


def total_loss(
    prediction: torch.Tensor,
    target: torch.Tensor,
    questions: Sequence[torch.Tensor],
    lambda_seg: float,
) -> LossBreakdown:
    """Combine regression and smoothing: total = reg + lambda_seg * seg."""
    if lambda_seg < 0:
        raise ValidationError(f"lambda_seg must be >= 0, got {lambda_seg}")
    reg = reg_loss(prediction, target)
    seg = smooth_loss(questions)
    return LossBreakdown(
        reg_loss=reg,
        seg_loss=seg,
        lambda_seg=lambda_seg,
        total=reg + lambda_seg * seg,
    )
