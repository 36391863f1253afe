"""sRGB <-> CIELAB conversion and the normalized model color space.

The model works in normalized channels in [-1, 1]:

  lab_ab mode: input is L / 50 - 1 from the CIELAB lightness channel, the
      prediction target is (a*, b*) / AB_SCALE. Reconstruction recombines
      the predicted chroma with the true L.
  rgb mode: input is the Rec.601 luma (or a supplied single-channel
      outline), target is RGB / 127.5 - 1.

CIELAB uses the standard sRGB D65 transform. The reference white is taken
as the transform of RGB (1, 1, 1) itself, so neutral grays map to
a* = b* = 0 exactly and white maps to L = 100 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .errors import ValidationError

LAB_L_HALF_RANGE = 50.0
AB_SCALE = 110.0  # |a*|,|b*| of sRGB-gamut colors stay below this

_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_WHITE = _RGB_TO_XYZ @ np.ones(3)
_DELTA = 6.0 / 29.0

_LUMA = np.array([0.299, 0.587, 0.114])


def _check_u8(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise ValidationError(f"expected an 8-bit image, got dtype {image.dtype}")
    if image.ndim == 2:
        image = np.stack([image] * 3, axis=-1)
    if image.ndim != 3 or image.shape[-1] != 3:
        raise ValidationError(f"expected (H, W) or (H, W, 3), got shape {image.shape}")
    return image


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * np.power(np.maximum(c, 0.0), 1 / 2.4) - 0.055)


def _f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3 * _DELTA**2) + 4.0 / 29.0)


def _f_inv(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA, t**3, 3 * _DELTA**2 * (t - 4.0 / 29.0))


def srgb_to_lab(image_u8: np.ndarray) -> np.ndarray:
    """8-bit sRGB (H, W, 3) or grayscale (H, W) to float64 CIELAB (H, W, 3)."""
    rgb = _check_u8(image_u8).astype(np.float64) / 255.0
    xyz = _srgb_to_linear(rgb) @ _RGB_TO_XYZ.T
    fxyz = _f(xyz / _WHITE)
    lab = np.empty_like(fxyz)
    lab[..., 0] = 116.0 * fxyz[..., 1] - 16.0
    lab[..., 1] = 500.0 * (fxyz[..., 0] - fxyz[..., 1])
    lab[..., 2] = 200.0 * (fxyz[..., 1] - fxyz[..., 2])
    return lab


def lab_to_srgb(lab: np.ndarray) -> np.ndarray:
    """Float CIELAB (..., 3) to 8-bit sRGB, out-of-gamut values clipped."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_f_inv(fx), _f_inv(fy), _f_inv(fz)], axis=-1) * _WHITE
    rgb = _linear_to_srgb(xyz @ _XYZ_TO_RGB.T)
    return np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class ColorSpaceSpec:
    """Which channels the model predicts and how they map to display colors."""

    mode: str = "lab_ab"

    def __post_init__(self):
        if self.mode not in ("lab_ab", "rgb"):
            raise ValidationError(f"unknown color space mode {self.mode!r}")

    @property
    def color_channels(self) -> int:
        return 2 if self.mode == "lab_ab" else 3

    def to_model_space(self, image_u8: np.ndarray) -> tuple[torch.Tensor, torch.Tensor]:
        """8-bit raster -> (input_x (1,H,W), target_y (K,H,W)) float32 tensors."""
        rgb = _check_u8(image_u8)
        if self.mode == "lab_ab":
            lab = srgb_to_lab(rgb)
            input_x = lab[..., 0] / LAB_L_HALF_RANGE - 1.0
            target = lab[..., 1:] / AB_SCALE
        else:
            input_x = (rgb.astype(np.float64) @ _LUMA) / 127.5 - 1.0
            target = rgb.astype(np.float64) / 127.5 - 1.0
        return (
            torch.from_numpy(input_x[None].astype(np.float32)),
            torch.from_numpy(np.moveaxis(target, -1, 0).astype(np.float32).copy()),
        )

    def input_from_image(self, image_u8: np.ndarray) -> torch.Tensor:
        """Model input channel only; accepts color or already-gray rasters."""
        return self.to_model_space(image_u8)[0]

    def from_model_space(self, prediction: torch.Tensor, input_x: torch.Tensor) -> np.ndarray:
        """Predicted channels + the original input channel -> 8-bit sRGB (H,W,3)."""
        pred = prediction.detach().cpu().numpy().astype(np.float64)
        x = input_x.detach().cpu().numpy().astype(np.float64)
        if pred.shape[0] != self.color_channels:
            raise ValidationError(
                f"prediction has {pred.shape[0]} channels, {self.mode} expects {self.color_channels}"
            )
        if self.mode == "lab_ab":
            lab = np.empty(pred.shape[1:] + (3,), dtype=np.float64)
            lab[..., 0] = (x[0] + 1.0) * LAB_L_HALF_RANGE
            lab[..., 1] = pred[0] * AB_SCALE
            lab[..., 2] = pred[1] * AB_SCALE
            return lab_to_srgb(lab)
        rgb = (np.moveaxis(pred, 0, -1) + 1.0) * 127.5
        return np.clip(np.round(rgb), 0, 255).astype(np.uint8)

    def answer_from_display_color(self, rgb_triple) -> torch.Tensor:
        """A display sRGB triple -> model-space answer vector (K,)."""
        arr = np.asarray(rgb_triple)
        if arr.shape != (3,):
            raise ValidationError(f"expected an (r, g, b) triple, got shape {arr.shape}")
        if arr.min() < 0 or arr.max() > 255:
            raise ValidationError("color components must lie in [0, 255]")
        pixel = arr.astype(np.uint8).reshape(1, 1, 3)
        if self.mode == "lab_ab":
            lab = srgb_to_lab(pixel)[0, 0]
            return torch.tensor([lab[1] / AB_SCALE, lab[2] / AB_SCALE], dtype=torch.float32)
        return torch.tensor(pixel[0, 0].astype(np.float64) / 127.5 - 1.0, dtype=torch.float32)

    def display_color_from_answer(self, answer: torch.Tensor, lightness: float = 65.0) -> tuple[int, int, int]:
        """Render a model-space answer as an sRGB swatch color."""
        a = answer.detach().cpu().numpy().astype(np.float64)
        if self.mode == "lab_ab":
            lab = np.array([lightness, a[0] * AB_SCALE, a[1] * AB_SCALE])
            rgb = lab_to_srgb(lab)
        else:
            rgb = np.clip(np.round((a + 1.0) * 127.5), 0, 255).astype(np.uint8)
        return tuple(int(v) for v in rgb)


def spec_for_mode(mode: str) -> ColorSpaceSpec:
    return ColorSpaceSpec(mode=mode)
