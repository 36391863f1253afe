import math

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from askpaint.errors import ValidationError
from askpaint.losses import reg_loss, smooth_loss, total_loss


def finite_difference_grad(fn, x, eps=1e-6):
    """Central differences, elementwise, float64."""
    grad = torch.zeros_like(x)
    flat = x.flatten()
    gflat = grad.flatten()
    for i in range(flat.numel()):
        orig = float(flat[i])
        flat[i] = orig + eps
        hi = float(fn(x))
        flat[i] = orig - eps
        lo = float(fn(x))
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * eps)
    return grad


def test_reg_loss_zero_iff_equal():
    y = torch.randn(2, 4, 4)
    assert float(reg_loss(y, y)) == 0.0
    assert float(reg_loss(y + 0.1, y)) > 0.0


def test_reg_loss_single_pixel_two_channels():
    pred = torch.ones(2, 1, 1)
    target = torch.zeros(2, 1, 1)
    assert float(reg_loss(pred, target)) == pytest.approx(2.0)


def test_reg_loss_constant_offset_closed_form():
    k, h, w = 3, 5, 7
    delta = 0.37
    pred = torch.zeros(k, h, w) + delta
    target = torch.zeros(k, h, w)
    assert float(reg_loss(pred, target)) == pytest.approx(k * delta**2, rel=1e-6)


def test_reg_loss_shape_mismatch():
    with pytest.raises(ValidationError):
        reg_loss(torch.zeros(2, 3, 3), torch.zeros(2, 4, 4))


def test_smooth_loss_constant_map_is_zero():
    assert float(smooth_loss([torch.full((6, 6), 0.4)])) == 0.0


def test_smooth_loss_2x2_vertical_stripes():
    q = torch.tensor([[0.0, 1.0], [0.0, 1.0]])
    assert float(smooth_loss([q])) == pytest.approx(0.5)


def test_smooth_loss_additive_over_maps():
    gen = torch.Generator().manual_seed(0)
    q = torch.rand(5, 5, generator=gen)
    assert float(smooth_loss([q, q])) == pytest.approx(2 * float(smooth_loss([q])), rel=1e-6)


def test_smooth_loss_empty_is_zero():
    assert float(smooth_loss([])) == 0.0


def test_smooth_loss_shape_mismatch():
    with pytest.raises(ValidationError):
        smooth_loss([torch.zeros(2, 2), torch.zeros(3, 3)])


@given(h=st.integers(2, 5), w=st.integers(2, 5), seed=st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_smooth_loss_transpose_invariance(h, w, seed):
    gen = torch.Generator().manual_seed(seed)
    maps = [torch.rand(h, w, generator=gen) for _ in range(3)]
    a = float(smooth_loss(maps))
    b = float(smooth_loss([m.T for m in maps]))
    assert a == pytest.approx(b, rel=1e-6)


def test_smooth_loss_checkerboard_is_maximal():
    h, w = 4, 6
    rows = torch.arange(h)[:, None]
    cols = torch.arange(w)[None, :]
    checker = ((rows + cols) % 2).to(torch.float32)
    best = float(smooth_loss([checker]))
    gen = torch.Generator().manual_seed(2)
    for _ in range(200):
        candidate = torch.rand(h, w, generator=gen)
        assert float(smooth_loss([candidate])) <= best + 1e-6
    # the theoretical maximum: every in-bounds neighbor difference is 1
    n_diffs = (h - 1) * w + h * (w - 1)
    assert best == pytest.approx(n_diffs / (h * w))


def test_total_loss_lambda_zero_equals_reg():
    gen = torch.Generator().manual_seed(3)
    pred = torch.rand(2, 4, 4, generator=gen)
    target = torch.rand(2, 4, 4, generator=gen)
    q = torch.rand(4, 4, generator=gen)
    lb = total_loss(pred, target, [q], 0.0)
    assert float(lb.total) == float(lb.reg_loss)


def test_total_loss_perfect_prediction_constant_questions():
    y = torch.randn(2, 4, 4)
    lb = total_loss(y, y, [torch.full((4, 4), 0.7)], 0.5)
    assert float(lb.total) == 0.0


def test_total_loss_arithmetic():
    # constructed so reg = 0.3 and seg = 0.5 exactly
    pred = torch.tensor([[[math.sqrt(0.3)]]], dtype=torch.float64)
    target = torch.zeros(1, 1, 1, dtype=torch.float64)
    q = torch.tensor([[0.0, 1.0]], dtype=torch.float64)
    lb = total_loss(pred, target, [q], 0.1)
    assert float(lb.reg_loss) == pytest.approx(0.3)
    assert float(lb.seg_loss) == pytest.approx(0.5)
    assert float(lb.total) == pytest.approx(0.35)


def test_total_loss_identity_to_machine_precision():
    gen = torch.Generator().manual_seed(4)
    pred = torch.rand(2, 5, 5, generator=gen, dtype=torch.float64)
    target = torch.rand(2, 5, 5, generator=gen, dtype=torch.float64)
    qs = [torch.rand(5, 5, generator=gen, dtype=torch.float64) for _ in range(3)]
    lb = total_loss(pred, target, qs, 0.013)
    assert float(lb.total) == float(lb.reg_loss) + 0.013 * float(lb.seg_loss)


def test_negative_lambda_rejected():
    with pytest.raises(ValidationError):
        total_loss(torch.zeros(1, 2, 2), torch.zeros(1, 2, 2), [], -0.1)


def test_gradients_match_finite_differences():
    gen = torch.Generator().manual_seed(5)
    for _ in range(5):
        pred = torch.rand(2, 5, 5, generator=gen, dtype=torch.float64)
        target = torch.rand(2, 5, 5, generator=gen, dtype=torch.float64)
        # keep |.| away from ties so the subgradient is unique
        q = (torch.rand(5, 5, generator=gen, dtype=torch.float64) * 0.8 + 0.1).requires_grad_()
        pred = pred.requires_grad_()

        def objective(p=pred, qq=q):
            return total_loss(p, target, [qq], 0.07).total

        lb = objective()
        lb.backward()
        fd_pred = finite_difference_grad(lambda p: total_loss(p, target, [q.detach()], 0.07).total, pred.detach().clone())
        fd_q = finite_difference_grad(lambda qq: total_loss(pred.detach(), target, [qq], 0.07).total, q.detach().clone())
        assert torch.allclose(pred.grad, fd_pred, rtol=1e-4, atol=1e-7)
        assert torch.allclose(q.grad, fd_q, rtol=1e-4, atol=1e-7)
