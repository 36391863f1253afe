"""Dataset directory format and loading.

A dataset is a flat folder of PNG images. Optional segmentation sidecars
live under a ``seg/`` subfolder with identical filenames, integer class
ids stored in the red channel. Real photographs are center-cropped and
resized to the working resolution; synthetic scenes are written at the
working resolution already.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .colorspace import ColorSpaceSpec
from .errors import ValidationError
from .synth import SyntheticSceneSpec, generate_scene, scene_to_srgb


def write_synthetic_dataset(
    out_dir: str | os.PathLike,
    spec: SyntheticSceneSpec,
    count: int,
    rng: np.random.Generator,
) -> list[Path]:
    """Render ``count`` scenes to ``out_dir`` as PNGs with seg sidecars."""
    out = Path(out_dir)
    (out / "seg").mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        x, y, seg = generate_scene(spec, rng)
        img = scene_to_srgb(x, y)
        name = f"scene_{i:05d}.png"
        Image.fromarray(img).save(out / name)
        seg_rgb = np.zeros(img.shape, dtype=np.uint8)
        seg_rgb[..., 0] = seg.numpy().astype(np.uint8)
        Image.fromarray(seg_rgb).save(out / "seg" / name)
        paths.append(out / name)
    return paths


def synthetic_eval_items(
    spec: SyntheticSceneSpec, count: int, rng: np.random.Generator
) -> list["DatasetItem"]:
    """In-memory held-out set; keeps the exact-ambiguity property intact."""
    items = []
    for _ in range(count):
        x, y, seg = generate_scene(spec, rng)
        items.append(
            DatasetItem(
                input_x=x,
                target_y=y,
                segmentation=seg,
                image_u8=scene_to_srgb(x, y),
                path=None,
            )
        )
    return items


def _center_crop_resize(img: Image.Image, size: tuple[int, int]) -> Image.Image:
    th, tw = size
    w, h = img.size
    scale = max(tw / w, th / h)
    img = img.resize((max(tw, round(w * scale)), max(th, round(h * scale))), Image.BILINEAR)
    w, h = img.size
    left, top = (w - tw) // 2, (h - th) // 2
    return img.crop((left, top, left + tw, top + th))


@dataclass
class DatasetItem:
    input_x: torch.Tensor  # (1, H, W)
    target_y: torch.Tensor  # (K, H, W)
    segmentation: torch.Tensor | None  # (H, W) int64
    image_u8: np.ndarray  # (H, W, 3) ground-truth raster
    path: Path | None


class ImageFolderDataset:
    """Images (and optional segmentations) from a dataset directory."""

    def __init__(
        self,
        root: str | os.PathLike,
        color_space: ColorSpaceSpec,
        image_size: tuple[int, int] | None = None,
    ):
        self.root = Path(root)
        self.color_space = color_space
        self.image_size = image_size
        if not self.root.is_dir():
            raise ValidationError(f"dataset directory {self.root} does not exist")
        self.paths = sorted(p for p in self.root.glob("*.png"))
        if not self.paths:
            raise ValidationError(f"no PNG images under {self.root}")

    def __len__(self) -> int:
        return len(self.paths)

    def __getitem__(self, index: int) -> DatasetItem:
        path = self.paths[index]
        img = Image.open(path).convert("RGB")
        if self.image_size is not None and img.size != (self.image_size[1], self.image_size[0]):
            img = _center_crop_resize(img, self.image_size)
        arr = np.asarray(img, dtype=np.uint8)
        input_x, target_y = self.color_space.to_model_space(arr)
        seg = None
        seg_path = self.root / "seg" / path.name
        if seg_path.exists():
            seg_img = Image.open(seg_path).convert("RGB")
            if seg_img.size != img.size:
                seg_img = seg_img.resize(img.size, Image.NEAREST)
            seg = torch.from_numpy(np.asarray(seg_img)[..., 0].astype(np.int64))
        return DatasetItem(
            input_x=input_x,
            target_y=target_y,
            segmentation=seg,
            image_u8=arr,
            path=path,
        )
