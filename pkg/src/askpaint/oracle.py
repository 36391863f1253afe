"""Answer computation for question heatmaps.

A question is a soft region mask over the image, values in [0, 1]. The
answer to a question is a single color: the question-weighted average of
the ground-truth color channels over that region. The answer is broadcast
back to image shape by multiplying it with the question, producing the
hint image the model consumes on its next pass.

All functions are differentiable in ``question`` and ``target`` and accept
arbitrary leading batch dimensions:

    question: (..., H, W)
    target:   (..., K, H, W)
    answer:   (..., K)
    hint:     (..., K, H, W)
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .errors import ValidationError

# Added to the mask-mass denominator so an all-zero question yields a zero
# answer instead of NaN (the zero question is reachable at episode start).
DENOM_EPS = 1e-8

# A question whose total mass is at or below this is treated as degenerate
# by consumers that need to exclude meaningless answers (evaluation).
DEGENERATE_MASS_THRESHOLD = 1e-6


@dataclass
class OracleConfig:
    """How rollout turns a pending question into an answer.

    ``stop_gradient`` detaches the answer from the graph (ablation switch);
    by default gradients flow through the answer computation. ``generator``
    feeds the noise draw so training stays reproducible.
    """

    noise: "NoiseConfig | None" = None
    eps: float = DENOM_EPS
    stop_gradient: bool = False
    generator: "torch.Generator | None" = None


@dataclass
class NoiseConfig:
    """Gaussian perturbation applied to answers during training.

    ``sigma`` is a standard deviation in normalized color units. Noise is
    meant to make small color differences indistinguishable so the model
    learns to ask high-contrast, single-region questions; it is disabled
    by default at evaluation and steering time.
    """

    enabled: bool = False
    sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValidationError(f"noise sigma must be >= 0, got {self.sigma}")


def validate_question(question: torch.Tensor) -> None:
    """Raise ValidationError unless ``question`` is finite and in [0, 1]."""
    if not torch.isfinite(question).all():
        raise ValidationError("question contains non-finite values")
    if question.lt(0).any() or question.gt(1).any():
        raise ValidationError("question values must lie in [0, 1]")


def question_mass(question: torch.Tensor) -> torch.Tensor:
    """Total soft mass of the question, summed over the two spatial dims."""
    return question.sum(dim=(-2, -1))


def is_degenerate(question: torch.Tensor, threshold: float = DEGENERATE_MASS_THRESHOLD) -> torch.Tensor:
    """Boolean (per leading batch element) flag for near-zero-mass questions."""
    return question_mass(question) <= threshold


def compute_answer(
    question: torch.Tensor,
    target: torch.Tensor,
    eps: float = DENOM_EPS,
) -> torch.Tensor:
    """Question-weighted mean color of ``target`` over the questioned region.

    Per channel k: sum_ij(q_ij * y_kij) / (sum_ij(q_ij) + eps). An all-zero
    question is not an error; the epsilon keeps the result finite (and zero).
    Use :func:`is_degenerate` to detect that case where it matters.
    """
    if question.shape[-2:] != target.shape[-2:]:
        raise ValidationError(
            f"question spatial shape {tuple(question.shape[-2:])} does not match "
            f"target {tuple(target.shape[-2:])}"
        )
    if question.shape[:-2] != target.shape[:-3]:
        raise ValidationError(
            f"question batch shape {tuple(question.shape[:-2])} does not match "
            f"target batch shape {tuple(target.shape[:-3])}"
        )
    weighted = (question.unsqueeze(-3) * target).sum(dim=(-2, -1))
    mass = question_mass(question).unsqueeze(-1)
    return weighted / (mass + eps)


def perturb_answer(
    answer: torch.Tensor,
    noise: NoiseConfig,
    generator: torch.Generator | None = None,
    clamp_range: tuple[float, float] = (-1.0, 1.0),
) -> torch.Tensor:
    """Add i.i.d. zero-mean Gaussian noise per channel, clamped to the valid range.

    Identity when disabled or sigma == 0. Clamping keeps perturbed answers
    representable as network inputs.
    """
    if not noise.enabled or noise.sigma == 0.0:
        return answer
    draw = torch.empty_like(answer).normal_(0.0, noise.sigma, generator=generator)
    return (answer + draw).clamp(*clamp_range)


def broadcast_hint(question: torch.Tensor, answer: torch.Tensor) -> torch.Tensor:
    """Spread a single answer color over the image: hint_kij = q_ij * a_k."""
    if question.shape[:-2] != answer.shape[:-1]:
        raise ValidationError(
            f"question batch shape {tuple(question.shape[:-2])} does not match "
            f"answer batch shape {tuple(answer.shape[:-1])}"
        )
    return question.unsqueeze(-3) * answer[..., :, None, None]
