import pytest
import torch

from nvc.entropy import round_half_away, universal_quantize
from nvc.entropy.quantize import dithered_round
from nvc.errors import NonFiniteInputError


def test_round_half_away_ties():
    x = torch.tensor([0.5, 1.5, 2.5, -0.5, -1.5, -2.5])
    expect = torch.tensor([1.0, 2.0, 3.0, -1.0, -2.0, -3.0])
    assert torch.equal(round_half_away(x), expect)


def test_dithered_round_positive_offset():
    # x=1.3, u=0.2 -> R(1.5) - 0.2 = 1.8
    out = dithered_round(torch.tensor([1.3]), 0.2)
    assert out.item() == pytest.approx(1.8, abs=1e-7)


def test_dithered_round_negative_offset():
    # x=0.7, u=-0.5 -> R(0.2) + 0.5 = 0.5
    out = dithered_round(torch.tensor([0.7]), -0.5)
    assert out.item() == pytest.approx(0.5, abs=1e-7)


def test_train_mode_applies_drawn_offset():
    # Train mode must reproduce R(x+u)-u with the seeded scalar draw.
    x = torch.randn(64) * 3
    for seed in (0, 1, 12345):
        gen = torch.Generator().manual_seed(seed)
        u = torch.rand((), generator=gen) - 0.5
        out = universal_quantize(x, mode="train", noise_seed=seed)
        assert torch.allclose(out, dithered_round(x, u), atol=1e-6)


def test_infer_mode_rounds():
    x = torch.tensor([-0.4, 2.6])
    out = universal_quantize(x, mode="infer")
    assert torch.equal(out, torch.tensor([0.0, 3.0]))


def test_infer_mode_returns_exact_integers():
    x = torch.randn(1000) * 10
    out = universal_quantize(x, mode="infer")
    assert torch.equal(out, out.floor() + (out - out.floor()))
    assert torch.equal(out, out.round())


def test_single_shared_offset_per_call():
    x = torch.zeros(1000) + 0.25
    out = universal_quantize(x, mode="train", noise_seed=7)
    # One scalar u: every element quantizes identically.
    assert out.unique().numel() == 1


def test_seed_reproducibility():
    x = torch.randn(32)
    a = universal_quantize(x, mode="train", noise_seed=99)
    b = universal_quantize(x, mode="train", noise_seed=99)
    assert torch.equal(a, b)


def test_pass_through_gradient():
    # d/dx f(quantize(x)) must equal f'(quantized point): the declared
    # straight-through rule, not the true (zero a.e.) derivative.
    x = torch.tensor([0.3, 1.7, -2.2], requires_grad=True)
    q = universal_quantize(x, mode="infer")
    f = (q ** 2).sum()
    f.backward()
    assert torch.allclose(x.grad, 2.0 * q.detach())


def test_pass_through_gradient_train_mode():
    x = torch.tensor([0.3, 1.7, -2.2], requires_grad=True)
    q = universal_quantize(x, mode="train", noise_seed=3)
    q.sum().backward()
    assert torch.equal(x.grad, torch.ones(3))


def test_non_finite_rejected_with_origin():
    x = torch.tensor([1.0, float("nan")])
    with pytest.raises(NonFiniteInputError, match="motion_encoder.stage3"):
        universal_quantize(x, mode="infer", origin="motion_encoder.stage3")


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        universal_quantize(torch.zeros(1), mode="test")
