import math

import pytest
import torch

from nvc.errors import ShapeMismatchError
from nvc.metrics import PSNR_CAP, ms_ssim, psnr


class TestPsnr:
    def test_identity_capped_at_100(self):
        x = torch.rand(3, 32, 32)
        assert psnr(x, x) == PSNR_CAP

    def test_unit_mse_on_8bit_scale(self):
        # MSE of 1 on the 0..255 scale: 10*log10(255^2) = 48.1308 dB.
        a = torch.zeros(1, 1, 16, 16)
        b = torch.ones(1, 1, 16, 16)
        assert psnr(a, b, peak=255.0) == pytest.approx(48.1308, abs=0.01)

    def test_known_mse_unit_peak(self):
        a = torch.zeros(4, 4)
        b = torch.full((4, 4), 0.5)
        assert psnr(a, b) == pytest.approx(10 * math.log10(1 / 0.25),
                                           abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            psnr(torch.zeros(3, 4, 4), torch.zeros(3, 4, 5))


class TestMsSsim:
    def test_identity_is_one(self):
        x = torch.rand(1, 3, 64, 64)
        assert float(ms_ssim(x, x)) == pytest.approx(1.0, abs=1e-7)

    def test_symmetric(self):
        torch.manual_seed(0)
        for _ in range(3):
            a = torch.rand(1, 3, 48, 48)
            b = torch.rand(1, 3, 48, 48)
            assert float(ms_ssim(a, b)) == pytest.approx(float(ms_ssim(b, a)),
                                                         rel=1e-6)

    def test_degrades_with_noise(self):
        torch.manual_seed(1)
        x = torch.rand(1, 3, 96, 96)
        small = (x + 0.02 * torch.randn_like(x)).clamp(0, 1)
        large = (x + 0.3 * torch.randn_like(x)).clamp(0, 1)
        assert float(ms_ssim(x, large)) < float(ms_ssim(x, small)) < 1.0

    def test_bounded_unit_interval(self):
        a = torch.zeros(1, 3, 32, 32)
        b = torch.ones(1, 3, 32, 32)
        v = float(ms_ssim(a, b))
        assert 0.0 <= v <= 1.0

    def test_differentiable(self):
        x = torch.rand(1, 3, 48, 48, requires_grad=True)
        y = torch.rand(1, 3, 48, 48)
        (1.0 - ms_ssim(x, y)).backward()
        assert torch.isfinite(x.grad).all()

    def test_small_frames_use_fewer_scales(self):
        # 48px frames cannot support 5 dyadic scales with an 11px window;
        # the reduced-scale fallback must still be exact on identity.
        x = torch.rand(1, 3, 48, 48)
        assert float(ms_ssim(x, x)) == pytest.approx(1.0, abs=1e-7)

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            ms_ssim(torch.rand(1, 3, 8, 8), torch.rand(1, 3, 8, 8))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            ms_ssim(torch.rand(1, 3, 32, 32), torch.rand(1, 3, 32, 33))
