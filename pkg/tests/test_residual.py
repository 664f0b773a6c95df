import pytest
import torch

from nvc.backbone import VaeConfig
from nvc.residual import ResidualCodec, reconstruct


@pytest.fixture
def codec(tiny_vae_cfg):
    torch.manual_seed(9)
    return ResidualCodec(tiny_vae_cfg).eval()


def test_reconstruct_identity():
    x = torch.rand(1, 3, 8, 8)
    assert torch.equal(reconstruct(x, torch.zeros_like(x)), x)


def test_reconstruct_clamps_high():
    pred = torch.full((1, 3, 4, 4), 0.9)
    r = torch.full((1, 3, 4, 4), 0.3)
    assert torch.equal(reconstruct(pred, r), torch.ones(1, 3, 4, 4))


def test_reconstruct_clamps_low():
    pred = torch.full((1, 3, 4, 4), 0.1)
    r = torch.full((1, 3, 4, 4), -0.5)
    assert torch.equal(reconstruct(pred, r), torch.zeros(1, 3, 4, 4))


def test_round_trip_bit_exact(codec):
    r = torch.rand(1, 3, 64, 64) * 2 - 1
    chunks, r_enc = codec.compress(r)
    assert [c.kind for c in chunks] == ["res_hyper", "res_main"]
    r_dec = codec.decompress(chunks, (4, 4))
    assert torch.equal(r_enc, r_dec)
    assert float(r_dec.min()) >= -1.0 and float(r_dec.max()) <= 1.0


def test_residual_range_is_natural():
    # r = X - X_pred with both in [0,1] lands in [-1,1] automatically.
    x = torch.rand(1, 3, 16, 16)
    pred = torch.rand(1, 3, 16, 16)
    r = x - pred
    assert float(r.min()) >= -1.0 and float(r.max()) <= 1.0


def test_clamp_consistency_both_sides(codec):
    # The decoder applies the same [-1,1] clamp as the encoder side.
    r = torch.rand(1, 3, 64, 64) * 2 - 1
    chunks, r_enc = codec.compress(r)
    r_dec = codec.decompress(chunks, (4, 4))
    assert float((r_enc - r_dec).abs().max()) == 0.0


def test_causality_through_res_context(codec):
    torch.manual_seed(10)
    latent = torch.randn(1, 16, 4, 4).round()
    hyper = torch.randn(1, 2, 16, 4, 4)
    base = codec.context(latent, hyper)
    j = 42
    mod = latent.clone()
    mod.reshape(-1)[j] -= 4.0
    out = codec.context(mod, hyper)
    assert torch.allclose(base.mu.reshape(-1)[: j + 1],
                          out.mu.reshape(-1)[: j + 1], atol=1e-7)
