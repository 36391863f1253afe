"""Quantitative evaluation protocols.

Three measurements, all against a trained checkpoint:

  * PSNR as a function of answers received: rollout with n = 0..max_steps
    oracle answers (noise off), reconstruct 8-bit output, compare to the
    ground-truth raster.
  * Question order vs. prediction difficulty: per image, build a per-pixel
    L1 error map from the zero-answer prediction, then measure the
    question-weighted mean error of each successive question. The weighted
    means are normalized by question mass so they are comparable to the
    global per-pixel average (both the normalized and raw sums are
    recorded).
  * Class precision: the fraction of a question's soft mass falling inside
    its best-matching segmentation class (background counts as a class).

Note the error map in the question-order protocol comes from this model's
own zero-answer prediction rather than a separately trained no-hint
baseline; the report metadata flags that.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch

from .colorspace import ColorSpaceSpec
from .data import DatasetItem
from .episode import rollout
from .errors import ValidationError
from .model import ColorizerNet
from .oracle import DEGENERATE_MASS_THRESHOLD, OracleConfig

PSNR_CAP_DB = 100.0


def psnr(prediction: np.ndarray, reference: np.ndarray) -> float:
    """Peak signal-to-noise ratio between two 8-bit rasters, in dB.

    MSE is averaged over every pixel and channel with peak 255; identical
    inputs return the cap value instead of infinity.
    """
    prediction = np.asarray(prediction)
    reference = np.asarray(reference)
    if prediction.shape != reference.shape:
        raise ValidationError(
            f"shape mismatch: {prediction.shape} vs {reference.shape}"
        )
    mse = np.mean((prediction.astype(np.float64) - reference.astype(np.float64)) ** 2)
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(255.0**2 / mse), PSNR_CAP_DB)


def _summary(values: Sequence[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    n = len(arr)
    std = float(arr.std(ddof=1)) if n > 1 else 0.0
    return {
        "mean": float(arr.mean()) if n else float("nan"),
        "std": std,
        "stderr": std / math.sqrt(n) if n else float("nan"),
        "n": n,
    }


def _batched(items: Sequence[DatasetItem], size: int):
    for i in range(0, len(items), size):
        yield items[i : i + size]


def eval_hint_curve(
    model: ColorizerNet,
    items: Sequence[DatasetItem],
    max_steps: int,
    color_space: ColorSpaceSpec,
    oracle_config: OracleConfig | None = None,
    batch_size: int = 50,
) -> dict[int, dict]:
    """Mean +/- stderr PSNR after n oracle answers, for n = 0..max_steps."""
    if not items:
        raise ValidationError("empty evaluation set")
    cfg = oracle_config or OracleConfig()
    curve: dict[int, dict] = {}
    for n in range(max_steps + 1):
        scores = []
        for chunk in _batched(items, batch_size):
            x = torch.stack([it.input_x for it in chunk])
            y = torch.stack([it.target_y for it in chunk])
            with torch.no_grad():
                prediction, _ = rollout(x, y, n, model, cfg)
            for i, item in enumerate(chunk):
                recon = color_space.from_model_space(prediction[i], item.input_x)
                scores.append(psnr(recon, item.image_u8))
        curve[n] = _summary(scores)
    return curve


def error_map(prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Per-pixel L1 color error, summed over channels: (K,H,W) -> (H,W)."""
    return (prediction - target).abs().sum(dim=-3)


def question_weighted_error(
    emap: torch.Tensor, question: torch.Tensor, normalize: bool = True
) -> float:
    """Question-mass-weighted error; normalized form is per-pixel comparable."""
    weighted = float((emap * question).sum())
    if not normalize:
        return weighted
    return weighted / float(question.sum())


def question_order_analysis(
    model: ColorizerNet,
    items: Sequence[DatasetItem],
    num_questions: int = 3,
    oracle_config: OracleConfig | None = None,
    degenerate_threshold: float = DEGENERATE_MASS_THRESHOLD,
) -> dict:
    """Compare each question's weighted error to the global average error.

    Per image: the error map comes from the zero-answer prediction; the
    questions come from a rollout in which each is answered in turn. Images
    with a degenerate (near-zero-mass) question are excluded and counted.
    """
    cfg = oracle_config or OracleConfig()
    baselines: list[float] = []
    weighted: dict[int, list[float]] = {i: [] for i in range(1, num_questions + 1)}
    weighted_raw: dict[int, list[float]] = {i: [] for i in range(1, num_questions + 1)}
    excluded = 0
    for item in items:
        with torch.no_grad():
            zero_pred, _ = rollout(item.input_x, None, 0, model, cfg)
            _, state = rollout(item.input_x, item.target_y, num_questions, model, cfg)
        emap = error_map(zero_pred, item.target_y)
        questions = state.question_history[:num_questions]
        if any(float(q.sum()) <= degenerate_threshold for q in questions):
            excluded += 1
            continue
        baselines.append(float(emap.mean()))
        for i, q in enumerate(questions, start=1):
            weighted[i].append(question_weighted_error(emap, q, normalize=True))
            weighted_raw[i].append(question_weighted_error(emap, q, normalize=False))
    return {
        "global_error_baseline": _summary(baselines),
        "weighted_error_by_question": {i: _summary(v) for i, v in weighted.items()},
        "weighted_error_by_question_unnormalized": {
            i: _summary(v) for i, v in weighted_raw.items()
        },
        "excluded_degenerate": excluded,
    }


def class_precision(
    questions: Sequence[torch.Tensor],
    segmentation: torch.Tensor,
    degenerate_threshold: float = DEGENERATE_MASS_THRESHOLD,
) -> list[float | None]:
    """Best-class mass fraction per question; None marks an excluded (zero) one.

    Soft masses, no binarization: precision = max_c sum(q[labels == c]) /
    sum(q). Invariant to positive rescaling of the question.
    """
    labels = segmentation
    results: list[float | None] = []
    class_ids = torch.unique(labels)
    for q in questions:
        if q.shape != labels.shape:
            raise ValidationError(
                f"question shape {tuple(q.shape)} does not match segmentation "
                f"{tuple(labels.shape)}"
            )
        mass = float(q.sum())
        if mass <= degenerate_threshold:
            results.append(None)
            continue
        best = max(float(q[labels == c].sum()) for c in class_ids)
        results.append(best / mass)
    return results


def class_precision_binarized(
    questions: Sequence[torch.Tensor],
    segmentation: torch.Tensor,
    threshold: float = 0.5,
) -> list[float | None]:
    """Variant that thresholds the heatmap before measuring containment."""
    return class_precision([(q > threshold).to(q.dtype) for q in questions], segmentation)


def dataset_class_precision(
    model: ColorizerNet,
    items: Sequence[DatasetItem],
    num_questions: int = 3,
    oracle_config: OracleConfig | None = None,
) -> dict:
    """Pool every answered question across the dataset and average precision."""
    cfg = oracle_config or OracleConfig()
    soft: list[float] = []
    hard: list[float] = []
    uniform: list[float] = []
    excluded = 0
    for item in items:
        if item.segmentation is None:
            raise ValidationError(f"no segmentation for {item.path}")
        with torch.no_grad():
            _, state = rollout(item.input_x, item.target_y, num_questions, model, cfg)
        questions = state.question_history[:num_questions]
        for p in class_precision(questions, item.segmentation):
            if p is None:
                excluded += 1
            else:
                soft.append(p)
        for p in class_precision_binarized(questions, item.segmentation):
            if p is not None:
                hard.append(p)
        flat = item.segmentation.flatten()
        uniform.append(float(flat.bincount().max()) / flat.numel())
    return {
        "soft": _summary(soft),
        "binarized": _summary(hard),
        "uniform_heatmap_baseline": _summary(uniform),
        "excluded_degenerate": excluded,
    }


@dataclass
class EvalReport:
    psnr_by_steps: dict[int, dict] = field(default_factory=dict)
    question_order: dict = field(default_factory=dict)
    class_precision: dict = field(default_factory=dict)
    run_metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "psnr_by_steps": {str(k): v for k, v in self.psnr_by_steps.items()},
            "question_order": _stringify_keys(self.question_order),
            "class_precision": self.class_precision,
            "run_metadata": self.run_metadata,
        }

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _stringify_keys(obj):
    if isinstance(obj, dict):
        return {str(k): _stringify_keys(v) for k, v in obj.items()}
    return obj


def evaluate_checkpoint(
    model: ColorizerNet,
    items: Sequence[DatasetItem],
    color_space: ColorSpaceSpec,
    max_steps: int = 3,
    num_questions: int = 3,
    metadata: dict | None = None,
    with_precision: bool = True,
) -> EvalReport:
    """Run every protocol and assemble one report."""
    report = EvalReport(run_metadata=dict(metadata or {}))
    report.run_metadata.setdefault(
        "protocol_notes",
        "error maps for the question-order analysis come from this model's own "
        "zero-answer prediction, not a separately trained no-hint baseline",
    )
    report.run_metadata["dataset_size"] = len(items)
    report.psnr_by_steps = eval_hint_curve(model, items, max_steps, color_space)
    report.question_order = question_order_analysis(model, items, num_questions)
    if with_precision and all(it.segmentation is not None for it in items):
        report.class_precision = dataset_class_precision(model, items, num_questions)
    return report
