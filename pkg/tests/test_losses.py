import itertools

import pytest
import torch

from nvc.errors import ShapeMismatchError
from nvc.training.losses import (multiscale_prediction_loss, pool_pyramid,
                                 rd_loss, scale_weight)


def test_scale_weights():
    assert [scale_weight(s) for s in range(5)] == [1, 4, 16, 64, 256]


def test_pool_pyramid_shapes():
    pyr = pool_pyramid(torch.rand(1, 3, 64, 64))
    assert [p.shape[-1] for p in pyr] == [64, 32, 16, 8, 4]


def test_pool_pyramid_hand_example():
    # 4x4 -> 2x2 stride-2 average pooling, checked by hand.
    x = torch.tensor([[1.0, 2.0, 3.0, 4.0],
                      [5.0, 6.0, 7.0, 8.0],
                      [9.0, 10.0, 11.0, 12.0],
                      [13.0, 14.0, 15.0, 16.0]]).reshape(1, 1, 4, 4)
    pyr = pool_pyramid(x, scales=2)
    expected = torch.tensor([[3.5, 5.5], [11.5, 13.5]]).reshape(1, 1, 2, 2)
    assert torch.equal(pyr[1], expected)


def test_zero_on_perfect_prediction():
    target = pool_pyramid(torch.rand(1, 3, 32, 32))
    pred = [t.clone() for t in target]
    assert float(multiscale_prediction_loss(pred, target)) == 0.0


def test_scale_weight_ratio_256_to_1():
    # The same error at the coarsest scale costs exactly 4^4 = 256x more
    # than at the finest scale.
    target = pool_pyramid(torch.zeros(1, 1, 32, 32))
    eps = 0.125

    pred_fine = [t.clone() for t in target]
    pred_fine[0] += eps
    loss_fine = multiscale_prediction_loss(pred_fine, target)

    pred_coarse = [t.clone() for t in target]
    pred_coarse[4] += eps
    loss_coarse = multiscale_prediction_loss(pred_coarse, target)

    assert float(loss_coarse) / float(loss_fine) == pytest.approx(256.0)


def test_scale_count_mismatch_rejected():
    target = pool_pyramid(torch.rand(1, 1, 32, 32))
    with pytest.raises(ShapeMismatchError):
        multiscale_prediction_loss(target[:4], target)
    bad = [t.clone() for t in target]
    bad[2] = torch.rand(1, 1, 9, 9)
    with pytest.raises(ShapeMismatchError):
        multiscale_prediction_loss(bad, target)


def test_gradient_matches_finite_differences():
    # 8x8 toy pyramid (4 scales down to 1x1), float64.
    torch.manual_seed(0)
    base = torch.rand(1, 1, 8, 8, dtype=torch.float64)
    target = pool_pyramid(base, scales=4)
    pred0 = torch.rand(1, 1, 8, 8, dtype=torch.float64)

    def loss_of(p0):
        return multiscale_prediction_loss(pool_pyramid(p0, scales=4), target)

    var = pred0.clone().requires_grad_(True)
    loss_of(var).backward()
    analytic = var.grad.clone()

    eps = 1e-6
    fd = torch.zeros_like(pred0)
    with torch.no_grad():
        for i, j in itertools.product(range(8), range(8)):
            up = pred0.clone()
            up[0, 0, i, j] += eps
            dn = pred0.clone()
            dn[0, 0, i, j] -= eps
            fd[0, 0, i, j] = (loss_of(up) - loss_of(dn)) / (2 * eps)
    rel = (analytic - fd).norm() / fd.norm()
    assert rel < 1e-3


class TestRdLoss:
    def test_lambda_zero_is_pure_rate(self):
        bits = torch.tensor(1234.0)
        out = rd_loss(torch.tensor(0.7), bits, 0.0, 100)
        assert float(out) == pytest.approx(12.34)

    def test_doubling_lambda_doubles_distortion_term(self):
        d = torch.tensor(0.5)
        bits = torch.tensor(640.0)
        j1 = float(rd_loss(d, bits, 2.0, 64))
        j2 = float(rd_loss(d, bits, 4.0, 64))
        bpp = 10.0
        assert j1 - bpp == pytest.approx(1.0)
        assert j2 - bpp == pytest.approx(2.0)

    def test_invalid_pixels(self):
        with pytest.raises(ValueError):
            rd_loss(torch.tensor(0.1), torch.tensor(1.0), 1.0, 0)

    def test_selects_brute_force_optimum_on_two_point_codec(self):
        # Toy codec with two operating points; minimizing J must agree
        # with exhaustive evaluation for every lambda.
        options = {"cheap": (100.0, 0.5), "sharp": (400.0, 0.05)}
        pixels = 100
        for lam in (0.1, 1.0, 4.0, 10.0, 100.0):
            j = {name: float(rd_loss(torch.tensor(d), torch.tensor(bits),
                                     lam, pixels))
                 for name, (bits, d) in options.items()}
            picked = min(j, key=j.get)
            brute = min(options, key=lambda n: options[n][0] / pixels
                        + lam * options[n][1])
            assert picked == brute
