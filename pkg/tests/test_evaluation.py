import numpy as np
import pytest
import torch

from askpaint.colorspace import ColorSpaceSpec
from askpaint.data import synthetic_eval_items
from askpaint.episode import rollout
from askpaint.errors import ValidationError
from askpaint.evaluation import (
    PSNR_CAP_DB,
    class_precision,
    class_precision_binarized,
    error_map,
    eval_hint_curve,
    psnr,
    question_order_analysis,
    question_weighted_error,
)
from askpaint.model import ModelConfig, build_model
from askpaint.synth import SyntheticSceneSpec


def test_psnr_identical_images_hit_cap():
    img = np.random.default_rng(0).integers(0, 256, (8, 8, 3), dtype=np.uint8)
    assert psnr(img, img) == PSNR_CAP_DB


def test_psnr_maximal_error_is_zero_db():
    a = np.zeros((4, 4, 3), dtype=np.uint8)
    b = np.full((4, 4, 3), 255, dtype=np.uint8)
    assert psnr(a, b) == pytest.approx(0.0)


def test_psnr_uniform_half_range_error():
    a = np.zeros((4, 4, 3), dtype=np.float64)
    b = np.full((4, 4, 3), 127.5)
    assert psnr(a, b) == pytest.approx(20 * np.log10(2), rel=1e-9)


def test_psnr_symmetric_and_permutation_invariant():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 256, (6, 6, 3), dtype=np.uint8)
    b = rng.integers(0, 256, (6, 6, 3), dtype=np.uint8)
    assert psnr(a, b) == psnr(b, a)
    perm = rng.permutation(36)
    ap = a.reshape(36, 3)[perm].reshape(6, 6, 3)
    bp = b.reshape(36, 3)[perm].reshape(6, 6, 3)
    assert psnr(ap, bp) == pytest.approx(psnr(a, b))


def test_psnr_shape_mismatch():
    with pytest.raises(ValidationError):
        psnr(np.zeros((2, 2, 3), dtype=np.uint8), np.zeros((3, 3, 3), dtype=np.uint8))


def test_weighted_error_uniform_equals_global_mean():
    gen = torch.Generator().manual_seed(2)
    emap = torch.rand(5, 7, generator=gen)
    uniform = torch.full((5, 7), 0.37)
    assert question_weighted_error(emap, uniform) == pytest.approx(float(emap.mean()), rel=1e-6)


def test_weighted_error_one_hot_picks_pixel():
    emap = torch.arange(16.0).reshape(4, 4)
    q = torch.zeros(4, 4)
    q[2, 3] = 1.0
    assert question_weighted_error(emap, q) == pytest.approx(float(emap[2, 3]))


def test_weighted_error_matches_brute_force():
    gen = torch.Generator().manual_seed(3)
    emap = torch.rand(4, 4, generator=gen, dtype=torch.float64)
    q = torch.rand(4, 4, generator=gen, dtype=torch.float64)
    num = 0.0
    den = 0.0
    for i in range(4):
        for j in range(4):
            num += float(emap[i, j]) * float(q[i, j])
            den += float(q[i, j])
    assert question_weighted_error(emap, q) == pytest.approx(num / den, rel=1e-12)
    assert question_weighted_error(emap, q, normalize=False) == pytest.approx(num, rel=1e-12)


def test_error_map_is_channel_summed_l1():
    pred = torch.tensor([[[0.0, 1.0]], [[2.0, 0.0]]])
    target = torch.zeros(2, 1, 2)
    assert torch.equal(error_map(pred, target), torch.tensor([[2.0, 1.0]]))


def test_class_precision_full_containment():
    seg = torch.zeros(4, 4, dtype=torch.int64)
    seg[1:3, 1:3] = 1
    q = torch.zeros(4, 4)
    q[1:3, 1:3] = 0.8
    assert class_precision([q], seg) == [pytest.approx(1.0)]


def test_class_precision_even_split():
    seg = torch.zeros(2, 2, dtype=torch.int64)
    seg[:, 1] = 1
    q = torch.full((2, 2), 0.5)
    assert class_precision([q], seg) == [pytest.approx(0.5)]


def test_class_precision_rescale_invariant():
    gen = torch.Generator().manual_seed(4)
    seg = torch.randint(0, 3, (5, 5), generator=gen)
    q = torch.rand(5, 5, generator=gen)
    (a,) = class_precision([q], seg)
    (b,) = class_precision([q * 0.25], seg)
    assert a == pytest.approx(b, rel=1e-6)


def test_class_precision_zero_question_excluded():
    seg = torch.zeros(3, 3, dtype=torch.int64)
    assert class_precision([torch.zeros(3, 3)], seg) == [None]


def test_class_precision_binarized_thresholds():
    seg = torch.zeros(2, 2, dtype=torch.int64)
    seg[0, 0] = 1
    q = torch.tensor([[0.9, 0.1], [0.2, 0.3]])
    # only the 0.9 pixel survives the 0.5 threshold -> fully inside class 1
    assert class_precision_binarized([q], seg) == [pytest.approx(1.0)]


@pytest.fixture(scope="module")
def small_eval_setup():
    model = build_model(ModelConfig(image_size=(32, 32), color_channels=2, depth=2, base_width=8, seed=5))
    items = synthetic_eval_items(SyntheticSceneSpec(), 6, np.random.default_rng(0))
    return model, items, ColorSpaceSpec("lab_ab")


def test_hint_curve_step_zero_equals_one_shot(small_eval_setup):
    model, items, cs = small_eval_setup
    curve = eval_hint_curve(model, items, 1, cs)
    scores = []
    for item in items:
        with torch.no_grad():
            pred, _ = rollout(item.input_x, None, 0, model)
        scores.append(psnr(cs.from_model_space(pred, item.input_x), item.image_u8))
    assert curve[0]["mean"] == pytest.approx(float(np.mean(scores)), rel=1e-9)
    assert curve[0]["n"] == len(items)


def test_hint_curve_rejects_empty_dataset(small_eval_setup):
    model, _, cs = small_eval_setup
    with pytest.raises(ValidationError):
        eval_hint_curve(model, [], 1, cs)


def test_question_order_analysis_shape(small_eval_setup):
    model, items, _ = small_eval_setup
    out = question_order_analysis(model, items, num_questions=3)
    assert set(out["weighted_error_by_question"]) == {1, 2, 3}
    processed = out["global_error_baseline"]["n"] + out["excluded_degenerate"]
    assert processed == len(items)
