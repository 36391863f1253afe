"""Synthetic scenes with color ambiguity built in.

Each scene is a flat background plus a few non-overlapping rectangles and
ellipses. Every region class owns a palette of CIELAB colors that share
one lightness value, so the grayscale input is literally identical no
matter which palette entry a region sampled: the color cannot be inferred
from the input, only asked for. Palettes are given different chroma
magnitudes per class so regions differ in how costly it is to guess them
wrong.

The generator emits model-space tensors directly ((L/50 - 1), (a*, b*) /
scale), which keeps the grayscale-invariance exact rather than subject to
8-bit rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .colorspace import AB_SCALE, LAB_L_HALF_RANGE, lab_to_srgb, srgb_to_lab
from .errors import GenerationError, ValidationError


@dataclass(frozen=True)
class ShapeClass:
    name: str  # "rect" or "ellipse"
    lightness: float
    palette_ab: tuple[tuple[float, float], ...]
    size_range: tuple[int, int] = (10, 16)


# Default palettes: per shape class, four in-gamut chroma options sharing one
# lightness and summing to zero (so the best colorless guess is gray), over a
# single known background color. An unambiguous background matters: if the
# background color also had to be asked for, a flat whole-image question
# would still decode it from the area-weighted answer, and that local
# optimum keeps desk-scale training from ever learning focused questions.
@dataclass
class SyntheticSceneSpec:
    image_size: tuple[int, int] = (32, 32)
    shape_count_range: tuple[int, int] = (2, 4)
    classes: tuple[ShapeClass, ...] = (
        ShapeClass(
            "rect",
            lightness=45.0,
            palette_ab=((-45.0, 40.0), (45.0, -40.0), (0.0, 45.0), (0.0, -45.0)),
        ),
        ShapeClass(
            "ellipse",
            lightness=62.0,
            palette_ab=((10.0, 45.0), (-10.0, -45.0), (0.0, 50.0), (0.0, -50.0)),
        ),
    )
    background_lightness: float = 80.0
    background_palette_ab: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    seed: int = 0
    max_placement_retries: int = 200

    def __post_init__(self):
        self.image_size = tuple(self.image_size)
        lo, hi = self.shape_count_range
        if lo < 0 or hi < lo:
            raise ValidationError(f"bad shape_count_range {self.shape_count_range}")
        for cls in self.classes:
            if len(set((cls.lightness,))) != 1 or not cls.palette_ab:
                raise ValidationError(f"class {cls.name} needs a non-empty palette")

    def to_dict(self) -> dict:
        return {
            "image_size": list(self.image_size),
            "shape_count_range": list(self.shape_count_range),
            "classes": [
                {
                    "name": c.name,
                    "lightness": c.lightness,
                    "palette_ab": [list(p) for p in c.palette_ab],
                    "size_range": list(c.size_range),
                }
                for c in self.classes
            ],
            "background_lightness": self.background_lightness,
            "background_palette_ab": [list(p) for p in self.background_palette_ab],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSceneSpec":
        kwargs = {}
        if "image_size" in d:
            kwargs["image_size"] = tuple(d["image_size"])
        if "shape_count_range" in d:
            kwargs["shape_count_range"] = tuple(d["shape_count_range"])
        if "classes" in d:
            kwargs["classes"] = tuple(
                ShapeClass(
                    name=c["name"],
                    lightness=c["lightness"],
                    palette_ab=tuple(tuple(p) for p in c["palette_ab"]),
                    size_range=tuple(c.get("size_range", (7, 13))),
                )
                for c in d["classes"]
            )
        if "background_lightness" in d:
            kwargs["background_lightness"] = d["background_lightness"]
        if "background_palette_ab" in d:
            kwargs["background_palette_ab"] = tuple(tuple(p) for p in d["background_palette_ab"])
        if "seed" in d:
            kwargs["seed"] = d["seed"]
        return cls(**kwargs)


def _shape_mask(kind: str, h: int, w: int, top: int, left: int, sh: int, sw: int) -> np.ndarray:
    mask = np.zeros((h, w), dtype=bool)
    if kind == "rect":
        mask[top : top + sh, left : left + sw] = True
        return mask
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    cy, cx = top + (sh - 1) / 2.0, left + (sw - 1) / 2.0
    ry, rx = sh / 2.0, sw / 2.0
    mask[((rows - cy) / ry) ** 2 + ((cols - cx) / rx) ** 2 <= 1.0] = True
    return mask


def default_spec_for_size(image_size: tuple[int, int]) -> SyntheticSceneSpec:
    """Default scene spec with shape sizes scaled to the working resolution."""
    base = SyntheticSceneSpec()
    factor = min(image_size) / min(base.image_size)
    classes = tuple(
        ShapeClass(
            c.name,
            c.lightness,
            c.palette_ab,
            (max(3, round(c.size_range[0] * factor)), max(4, round(c.size_range[1] * factor))),
        )
        for c in base.classes
    )
    return SyntheticSceneSpec(
        image_size=tuple(image_size),
        shape_count_range=base.shape_count_range,
        classes=classes,
        background_lightness=base.background_lightness,
        background_palette_ab=base.background_palette_ab,
    )


def generate_scene(
    spec: SyntheticSceneSpec, rng: np.random.Generator, scene_retries: int = 20
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """One scene -> (input_x (1,H,W), target_y (2,H,W), segmentation (H,W)).

    Segmentation labels are shape instance ids, 0 for background. Shape
    pixels never overlap; a crowded layout is resampled from scratch, and
    GenerationError is raised only once every retry budget is spent.
    """
    last_error = None
    for _ in range(scene_retries):
        try:
            return _generate_scene_once(spec, rng)
        except GenerationError as exc:
            last_error = exc
    raise GenerationError(f"gave up after {scene_retries} scene attempts: {last_error}")


def _generate_scene_once(
    spec: SyntheticSceneSpec, rng: np.random.Generator
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    h, w = spec.image_size
    lightness = np.full((h, w), spec.background_lightness)
    bg_ab = spec.background_palette_ab[rng.integers(len(spec.background_palette_ab))]
    ab = np.empty((h, w, 2))
    ab[..., 0], ab[..., 1] = bg_ab
    seg = np.zeros((h, w), dtype=np.int64)
    occupied = np.zeros((h, w), dtype=bool)

    n_shapes = int(rng.integers(spec.shape_count_range[0], spec.shape_count_range[1] + 1))
    for idx in range(1, n_shapes + 1):
        cls = spec.classes[rng.integers(len(spec.classes))]
        placed = False
        for _ in range(spec.max_placement_retries):
            sh = int(rng.integers(cls.size_range[0], cls.size_range[1] + 1))
            sw = int(rng.integers(cls.size_range[0], cls.size_range[1] + 1))
            if sh > h or sw > w:
                continue
            top = int(rng.integers(0, h - sh + 1))
            left = int(rng.integers(0, w - sw + 1))
            mask = _shape_mask(cls.name, h, w, top, left, sh, sw)
            if not (mask & occupied).any():
                placed = True
                break
        if not placed:
            raise GenerationError(
                f"could not place shape {idx}/{n_shapes} after "
                f"{spec.max_placement_retries} retries"
            )
        color = cls.palette_ab[rng.integers(len(cls.palette_ab))]
        lightness[mask] = cls.lightness
        ab[mask] = color
        seg[mask] = idx
        occupied |= mask

    input_x = torch.from_numpy((lightness / LAB_L_HALF_RANGE - 1.0)[None].astype(np.float32))
    target_y = torch.from_numpy(np.moveaxis(ab / AB_SCALE, -1, 0).astype(np.float32).copy())
    return input_x, target_y, torch.from_numpy(seg)


def generate_synthetic_batch(
    spec: SyntheticSceneSpec, batch_size: int, rng: np.random.Generator
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Stacked scenes: (B,1,H,W) inputs, (B,2,H,W) targets, (B,H,W) labels."""
    xs, ys, segs = [], [], []
    for _ in range(batch_size):
        x, y, s = generate_scene(spec, rng)
        xs.append(x)
        ys.append(y)
        segs.append(s)
    return torch.stack(xs), torch.stack(ys), torch.stack(segs)


def scene_to_srgb(input_x: torch.Tensor, target_y: torch.Tensor) -> np.ndarray:
    """Ground-truth 8-bit rendering of a model-space scene."""
    lab = np.empty(input_x.shape[-2:] + (3,))
    lab[..., 0] = (input_x[0].numpy().astype(np.float64) + 1.0) * LAB_L_HALF_RANGE
    lab[..., 1] = target_y[0].numpy().astype(np.float64) * AB_SCALE
    lab[..., 2] = target_y[1].numpy().astype(np.float64) * AB_SCALE
    return lab_to_srgb(lab)


def validate_default_palettes(spec: SyntheticSceneSpec | None = None) -> None:
    """Check every palette color is inside the sRGB gamut (round-trip stable).

    Out-of-gamut palette entries would silently break the exact-ambiguity
    property once scenes are rendered to 8-bit, so specs should be checked
    once at configuration time.
    """
    spec = spec or SyntheticSceneSpec()
    entries = [(spec.background_lightness, ab) for ab in spec.background_palette_ab]
    for cls in spec.classes:
        entries.extend((cls.lightness, ab) for ab in cls.palette_ab)
    for lightness, (a, b) in entries:
        rgb = lab_to_srgb(np.array([lightness, a, b]))
        back = srgb_to_lab(rgb.reshape(1, 1, 3))[0, 0]
        err = np.abs(back - np.array([lightness, a, b])).max()
        if err > 1.0:
            raise ValidationError(
                f"palette color L={lightness} ab=({a},{b}) is outside the sRGB gamut "
                f"(round-trip error {err:.2f})"
            )
