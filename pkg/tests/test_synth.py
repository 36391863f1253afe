import numpy as np
import pytest
import torch

from askpaint.errors import GenerationError
from askpaint.synth import (
    ShapeClass,
    SyntheticSceneSpec,
    generate_scene,
    generate_synthetic_batch,
    scene_to_srgb,
    validate_default_palettes,
)


def single_color_spec(which: int) -> SyntheticSceneSpec:
    """Collapse every palette to one entry so geometry streams stay aligned."""
    base = SyntheticSceneSpec()
    classes = tuple(
        ShapeClass(c.name, c.lightness, (c.palette_ab[which],), c.size_range)
        for c in base.classes
    )
    bg = base.background_palette_ab[min(which, len(base.background_palette_ab) - 1)]
    return SyntheticSceneSpec(classes=classes, background_palette_ab=(bg,))


def test_default_palettes_are_valid():
    validate_default_palettes()


def test_ambiguity_identical_grayscale_different_colors():
    spec_a, spec_b = single_color_spec(0), single_color_spec(1)
    rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
    xa, ya, sa = generate_scene(spec_a, rng_a)
    xb, yb, sb = generate_scene(spec_b, rng_b)
    assert torch.equal(xa, xb), "grayscale input must not depend on sampled colors"
    assert torch.equal(sa, sb)
    assert not torch.equal(ya, yb)


def test_fixed_seed_bit_identical():
    spec = SyntheticSceneSpec()
    a = generate_synthetic_batch(spec, 4, np.random.default_rng(9))
    b = generate_synthetic_batch(spec, 4, np.random.default_rng(9))
    for ta, tb in zip(a, b):
        assert torch.equal(ta, tb)


def test_scene_structure_over_many_scenes():
    spec = SyntheticSceneSpec()
    rng = np.random.default_rng(11)
    for _ in range(300):
        x, y, seg = generate_scene(spec, rng)
        labels = torch.unique(seg).tolist()
        n = max(labels)
        # labels are contiguous 0..n and partition all pixels
        assert labels == list(range(n + 1))
        assert spec.shape_count_range[0] <= n <= spec.shape_count_range[1]
        for label in labels:
            mask = seg == label
            assert mask.any()
            # every region is color-constant in the target
            for c in range(2):
                vals = y[c][mask]
                assert float(vals.max() - vals.min()) == 0.0
        # grayscale is constant per class lightness
        assert x.min() >= -1.0 and x.max() <= 1.0


def test_shape_pixels_never_overlap():
    # overlap would show as a shape id overwriting another; verify areas are
    # consistent with disjoint placement by regenerating masks additively
    spec = SyntheticSceneSpec()
    rng = np.random.default_rng(13)
    for _ in range(100):
        _, _, seg = generate_scene(spec, rng)
        n = int(seg.max())
        total = sum(int((seg == i).sum()) for i in range(1, n + 1))
        assert total == int((seg > 0).sum())


def test_infeasible_placement_raises():
    spec = SyntheticSceneSpec(
        image_size=(16, 16),
        shape_count_range=(4, 4),
        classes=(ShapeClass("rect", 45.0, ((10.0, 10.0),), size_range=(14, 15)),),
        max_placement_retries=10,
    )
    with pytest.raises(GenerationError):
        generate_scene(spec, np.random.default_rng(0), scene_retries=3)


def test_render_matches_palette_colors():
    spec = single_color_spec(0)
    x, y, seg = generate_scene(spec, np.random.default_rng(3))
    img = scene_to_srgb(x, y)
    assert img.shape == (32, 32, 3) and img.dtype == np.uint8
    # background pixels are all one color
    bg = img[(seg == 0).numpy()]
    assert (bg == bg[0]).all()


def test_spec_dict_round_trip():
    spec = SyntheticSceneSpec(seed=42, shape_count_range=(3, 5))
    again = SyntheticSceneSpec.from_dict(spec.to_dict())
    assert again.to_dict() == spec.to_dict()
