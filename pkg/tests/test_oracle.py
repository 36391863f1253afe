import hypothesis.strategies as st
import pytest
import torch
from hypothesis import given, settings

from askpaint.errors import ValidationError
from askpaint.oracle import (
    NoiseConfig,
    broadcast_hint,
    compute_answer,
    is_degenerate,
    perturb_answer,
    validate_question,
)


def loop_answer(question, target, eps=1e-8):
    """Independent explicit-loop reference for the masked average."""
    h, w = question.shape
    k = target.shape[0]
    out = []
    for c in range(k):
        num = 0.0
        den = 0.0
        for i in range(h):
            for j in range(w):
                num += float(question[i, j]) * float(target[c, i, j])
                den += float(question[i, j])
        out.append(num / (den + eps))
    return torch.tensor(out, dtype=target.dtype)


def test_uniform_mask_is_arithmetic_mean():
    q = torch.ones(2, 2)
    y = torch.tensor([[[2.0, 4.0], [8.0, 16.0]]])
    assert compute_answer(q, y).item() == pytest.approx(7.5, rel=1e-7)


def test_one_hot_mask_picks_single_pixel():
    q = torch.zeros(2, 2)
    q[0, 0] = 1.0
    y = torch.tensor([[[2.0, 4.0], [8.0, 16.0]]])
    assert compute_answer(q, y).item() == pytest.approx(2.0, rel=1e-7)


def test_half_mask_example_matches_hand_computation():
    q = torch.tensor([[0.5, 0.5], [0.0, 0.0]])
    y = torch.tensor([[[2.0, 4.0], [8.0, 16.0]]])
    # (0.5*2 + 0.5*4) / (0.5 + 0.5) = 3
    assert compute_answer(q, y).item() == pytest.approx(3.0, rel=1e-7)


def test_matches_explicit_loops_on_random_instances():
    gen = torch.Generator().manual_seed(42)
    for _ in range(25):
        q = torch.rand(5, 4, generator=gen, dtype=torch.float64)
        y = torch.randn(3, 5, 4, generator=gen, dtype=torch.float64)
        fast = compute_answer(q, y)
        slow = loop_answer(q, y)
        assert torch.allclose(fast, slow, rtol=1e-12, atol=1e-12)


def test_batched_matches_per_sample():
    gen = torch.Generator().manual_seed(1)
    q = torch.rand(6, 4, 4, generator=gen)
    y = torch.randn(6, 2, 4, 4, generator=gen)
    batched = compute_answer(q, y)
    for i in range(6):
        assert torch.allclose(batched[i], compute_answer(q[i], y[i]))


def test_zero_mask_is_degenerate_not_an_error():
    q = torch.zeros(3, 3)
    y = torch.ones(2, 3, 3)
    answer = compute_answer(q, y)
    assert torch.isfinite(answer).all()
    assert answer.abs().max() == 0.0
    assert bool(is_degenerate(q))
    assert not bool(is_degenerate(torch.ones(3, 3)))


def test_shape_mismatch_rejected():
    with pytest.raises(ValidationError):
        compute_answer(torch.ones(2, 2), torch.ones(1, 3, 3))
    with pytest.raises(ValidationError):
        broadcast_hint(torch.ones(4, 2, 2), torch.ones(3, 1))


def test_validate_question():
    validate_question(torch.rand(3, 3))
    with pytest.raises(ValidationError):
        validate_question(torch.full((2, 2), 1.5))
    with pytest.raises(ValidationError):
        validate_question(torch.tensor([[float("nan"), 0.0]]))


@given(alpha=st.floats(min_value=-5, max_value=5, allow_nan=False))
@settings(max_examples=30, deadline=None)
def test_scale_covariance_in_target(alpha):
    gen = torch.Generator().manual_seed(7)
    q = torch.rand(4, 4, generator=gen, dtype=torch.float64) * 0.9 + 0.05
    y = torch.randn(2, 4, 4, generator=gen, dtype=torch.float64)
    assert torch.allclose(compute_answer(q, alpha * y), alpha * compute_answer(q, y), atol=1e-9)


@given(beta=st.floats(min_value=0.05, max_value=1.0, allow_nan=False))
@settings(max_examples=30, deadline=None)
def test_mask_scale_invariance_up_to_epsilon(beta):
    gen = torch.Generator().manual_seed(8)
    q = torch.rand(4, 4, generator=gen, dtype=torch.float64) * 0.9 + 0.05
    y = torch.randn(2, 4, 4, generator=gen, dtype=torch.float64)
    assert torch.allclose(compute_answer(beta * q, y), compute_answer(q, y), atol=1e-6)


def test_answer_in_convex_hull_of_targets():
    gen = torch.Generator().manual_seed(9)
    for _ in range(20):
        q = torch.rand(5, 5, generator=gen) * 0.9 + 0.1
        y = torch.randn(2, 5, 5, generator=gen)
        a = compute_answer(q, y)
        lo = y.amin(dim=(1, 2))
        hi = y.amax(dim=(1, 2))
        assert (a >= lo - 1e-5).all() and (a <= hi + 1e-5).all()


def test_perturb_identity_when_sigma_zero():
    a = torch.tensor([0.3, -0.2])
    out = perturb_answer(a, NoiseConfig(enabled=True, sigma=0.0))
    assert torch.equal(out, a)


def test_perturb_identity_when_disabled():
    a = torch.tensor([0.3, -0.2])
    out = perturb_answer(a, NoiseConfig(enabled=False, sigma=0.1))
    assert torch.equal(out, a)


def test_perturb_noise_statistics():
    gen = torch.Generator().manual_seed(123)
    sigma = 0.05
    a = torch.zeros(100_000, 2)
    out = perturb_answer(a, NoiseConfig(enabled=True, sigma=sigma), generator=gen, clamp_range=(-10, 10))
    emp = out.std(dim=0)
    assert ((emp - sigma).abs() / sigma < 0.05).all()


def test_perturb_clamps_to_range():
    gen = torch.Generator().manual_seed(5)
    a = torch.full((1000, 2), 0.99)
    out = perturb_answer(a, NoiseConfig(enabled=True, sigma=0.5), generator=gen)
    assert out.max() <= 1.0 and out.min() >= -1.0


def test_negative_sigma_rejected():
    with pytest.raises(ValidationError):
        NoiseConfig(enabled=True, sigma=-0.1)


def test_broadcast_zero_question_annihilates():
    hint = broadcast_hint(torch.zeros(3, 3), torch.tensor([0.5, -0.5]))
    assert hint.shape == (2, 3, 3)
    assert hint.abs().max() == 0.0


def test_broadcast_constant():
    hint = broadcast_hint(torch.ones(2, 2), torch.tensor([0.3, -0.2]))
    assert torch.allclose(hint[0], torch.full((2, 2), 0.3))
    assert torch.allclose(hint[1], torch.full((2, 2), -0.2))


def test_broadcast_elementwise_recompute():
    gen = torch.Generator().manual_seed(11)
    q = torch.rand(4, 5, generator=gen, dtype=torch.float64)
    a = torch.randn(3, generator=gen, dtype=torch.float64)
    hint = broadcast_hint(q, a)
    for k in range(3):
        for i in range(4):
            for j in range(5):
                assert float(hint[k, i, j]) - float(q[i, j]) * float(a[k]) == 0.0


def test_gradients_flow_through_answer_and_hint():
    q = torch.rand(5, 5, dtype=torch.float64, requires_grad=True)
    y = torch.randn(2, 5, 5, dtype=torch.float64)
    a = compute_answer(q, y)
    hint = broadcast_hint(q, a)
    hint.sum().backward()
    assert q.grad is not None and torch.isfinite(q.grad).all()
    assert q.grad.abs().sum() > 0
