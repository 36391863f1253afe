import numpy as np
import pytest
import torch

from askpaint.colorspace import (
    AB_SCALE,
    ColorSpaceSpec,
    lab_to_srgb,
    srgb_to_lab,
)
from askpaint.errors import ValidationError


def test_neutral_gray_has_zero_chroma():
    gray = np.full((3, 3, 3), 128, dtype=np.uint8)
    lab = srgb_to_lab(gray)
    assert np.all(lab[..., 1] == 0.0)
    assert np.all(lab[..., 2] == 0.0)


def test_white_lightness_is_exactly_100():
    white = np.full((1, 1, 3), 255, dtype=np.uint8)
    assert srgb_to_lab(white)[0, 0, 0] == 100.0


def test_black_lightness_is_zero():
    black = np.zeros((1, 1, 3), dtype=np.uint8)
    assert srgb_to_lab(black)[0, 0, 0] == pytest.approx(0.0, abs=1e-9)


def test_lab_round_trip_exact_for_u8():
    rng = np.random.default_rng(7)
    img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
    back = lab_to_srgb(srgb_to_lab(img))
    assert np.abs(back.astype(int) - img.astype(int)).max() <= 1


def test_model_space_round_trip_lab():
    rng = np.random.default_rng(8)
    img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
    spec = ColorSpaceSpec("lab_ab")
    x, y = spec.to_model_space(img)
    assert x.shape == (1, 16, 16) and y.shape == (2, 16, 16)
    back = spec.from_model_space(y, x)
    assert np.abs(back.astype(int) - img.astype(int)).max() <= 1


def test_model_space_round_trip_rgb():
    rng = np.random.default_rng(9)
    img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
    spec = ColorSpaceSpec("rgb")
    x, y = spec.to_model_space(img)
    assert x.shape == (1, 16, 16) and y.shape == (3, 16, 16)
    back = spec.from_model_space(y, x)
    assert np.abs(back.astype(int) - img.astype(int)).max() <= 1


def test_grayscale_input_accepted():
    gray = np.random.default_rng(0).integers(0, 256, (8, 8), dtype=np.uint8).astype(np.uint8)
    spec = ColorSpaceSpec("lab_ab")
    x, y = spec.to_model_space(gray)
    assert torch.allclose(y, torch.zeros_like(y), atol=1e-6)


def test_unsupported_dtype_rejected():
    img = np.zeros((4, 4, 3), dtype=np.float32)
    with pytest.raises(ValidationError):
        ColorSpaceSpec("lab_ab").to_model_space(img)


def test_unknown_mode_rejected():
    with pytest.raises(ValidationError):
        ColorSpaceSpec("hsv")


def test_ab_values_stay_inside_normalized_range():
    rng = np.random.default_rng(10)
    img = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
    _, y = ColorSpaceSpec("lab_ab").to_model_space(img)
    assert y.abs().max() < 1.0  # AB_SCALE chosen to cover the sRGB gamut


def test_answer_from_display_color_lab():
    spec = ColorSpaceSpec("lab_ab")
    answer = spec.answer_from_display_color([255, 0, 0])
    lab = srgb_to_lab(np.array([[[255, 0, 0]]], dtype=np.uint8))[0, 0]
    assert answer[0].item() == pytest.approx(lab[1] / AB_SCALE, rel=1e-6)
    assert answer[1].item() == pytest.approx(lab[2] / AB_SCALE, rel=1e-6)


def test_answer_from_display_color_rgb_round_trip():
    spec = ColorSpaceSpec("rgb")
    answer = spec.answer_from_display_color([10, 200, 30])
    back = spec.display_color_from_answer(answer)
    assert back == (10, 200, 30)


def test_answer_from_display_color_validation():
    spec = ColorSpaceSpec("rgb")
    with pytest.raises(ValidationError):
        spec.answer_from_display_color([300, 0, 0])
    with pytest.raises(ValidationError):
        spec.answer_from_display_color([1, 2])


def test_from_model_space_channel_check():
    spec = ColorSpaceSpec("lab_ab")
    with pytest.raises(ValidationError):
        spec.from_model_space(torch.zeros(3, 4, 4), torch.zeros(1, 4, 4))
