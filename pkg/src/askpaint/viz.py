"""Rendering helpers: heatmap PNGs and episode montage strips.

The montage layout is one column per forward pass with three rows: the
answer consumed by that pass as a color swatch (blank for the first pass),
the prediction after the pass, and the question it asked.
"""

from __future__ import annotations

import io

import numpy as np
import torch
from PIL import Image

from .colorspace import LAB_L_HALF_RANGE, ColorSpaceSpec
from .episode import EpisodeState

SWATCH_BLANK = 230  # light gray fill for the "no answer yet" cell


def heatmap_to_u8(question: torch.Tensor) -> np.ndarray:
    """[0,1] question map -> (H, W) grayscale bytes."""
    return np.clip(np.round(question.detach().cpu().numpy() * 255.0), 0, 255).astype(np.uint8)


def png_bytes(array_u8: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(array_u8).save(buf, format="PNG")
    return buf.getvalue()


def _upscale(img: np.ndarray, scale: int) -> np.ndarray:
    return np.kron(img, np.ones((scale, scale, 1) if img.ndim == 3 else (scale, scale), dtype=img.dtype))


def _as_rgb(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        return np.stack([img] * 3, axis=-1)
    return img


def answer_swatch_color(
    answer: torch.Tensor,
    question: torch.Tensor,
    input_x: torch.Tensor,
    color_space: ColorSpaceSpec,
) -> tuple[int, int, int]:
    """Render an answer at the questioned region's own mean lightness."""
    if color_space.mode == "lab_ab":
        mass = float(question.sum())
        if mass > 0:
            l_norm = float((question * input_x[0]).sum()) / mass
        else:
            l_norm = 0.3
        lightness = (l_norm + 1.0) * LAB_L_HALF_RANGE
        return color_space.display_color_from_answer(answer, lightness=lightness)
    return color_space.display_color_from_answer(answer)


def episode_montage(
    state: EpisodeState,
    color_space: ColorSpaceSpec,
    scale: int = 4,
    gap: int = 2,
) -> np.ndarray:
    """Three-row strip over the episode's forward passes.

    Top: answer swatches (pass i >= 1 shows the answer it consumed).
    Middle: prediction after each pass. Bottom: question after each pass.
    """
    h, w = state.input_x.shape[-2:]
    columns = state.step_t
    tile_h, tile_w = h * scale, w * scale
    out_h = 3 * tile_h + 2 * gap
    out_w = columns * tile_w + (columns - 1) * gap if columns else tile_w
    canvas = np.full((out_h, out_w, 3), 255, dtype=np.uint8)
    for col in range(columns):
        x0 = col * (tile_w + gap)
        if col >= 1 and col - 1 < len(state.answer_history):
            color = answer_swatch_color(
                state.answer_history[col - 1],
                state.question_history[col - 1],
                state.input_x,
                color_space,
            )
            swatch = np.tile(np.array(color, dtype=np.uint8), (tile_h, tile_w, 1))
        else:
            swatch = np.full((tile_h, tile_w, 3), SWATCH_BLANK, dtype=np.uint8)
        canvas[0:tile_h, x0 : x0 + tile_w] = swatch
        pred = color_space.from_model_space(state.prediction_history[col], state.input_x)
        canvas[tile_h + gap : 2 * tile_h + gap, x0 : x0 + tile_w] = _upscale(pred, scale)
        q = _as_rgb(heatmap_to_u8(state.question_history[col]))
        canvas[2 * (tile_h + gap) :, x0 : x0 + tile_w] = _upscale(q, scale)
    return canvas


def save_montage(state: EpisodeState, color_space: ColorSpaceSpec, path, scale: int = 4) -> None:
    Image.fromarray(episode_montage(state, color_space, scale=scale)).save(path)
