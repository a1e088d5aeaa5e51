"""Testes da álgebra de máscaras."""

import numpy as np
import pytest
import torch

from latent_camo.core.exceptions import DataValidationError
from latent_camo.imaging.maskops import annulus, binarize, composite, dilate, downsample_mask


def _random_mask(seed: int, size: int = 16, p: float = 0.15) -> torch.Tensor:
    rng = np.random.default_rng(seed)
    return torch.from_numpy((rng.random((size, size)) < p).astype(np.float32))


def _window_max_oracle(mask: np.ndarray, k: int) -> np.ndarray:
    h, w = mask.shape
    r = k // 2
    out = np.zeros_like(mask)
    for i in range(h):
        for j in range(w):
            window = mask[max(0, i - r) : i + r + 1, max(0, j - r) : j + r + 1]
            out[i, j] = window.max()
    return out


def _block_mean_oracle(mask: np.ndarray, f: int) -> np.ndarray:
    h, w = mask.shape
    out = np.zeros((h // f, w // f))
    for i in range(h // f):
        for j in range(w // f):
            total = 0.0
            for di in range(f):
                for dj in range(f):
                    total += mask[i * f + di, j * f + dj]
            out[i, j] = total / (f * f)
    return out


class TestDilate:
    def test_single_pixel_kernel_3(self):
        m = torch.zeros(5, 5)
        m[2, 2] = 1
        expected = torch.zeros(5, 5)
        expected[1:4, 1:4] = 1
        assert torch.equal(dilate(m, 3), expected)

    def test_kernel_1_is_identity(self):
        m = _random_mask(0)
        assert torch.equal(dilate(m, 1), m)

    @pytest.mark.parametrize("seed", range(50))
    def test_matches_window_max_oracle(self, seed):
        m = _random_mask(seed)
        expected = _window_max_oracle(m.numpy(), 5)
        np.testing.assert_array_equal(dilate(m, 5).numpy(), expected)

    def test_contains_input_and_is_monotone(self):
        m = _random_mask(3)
        small, large = dilate(m, 3), dilate(m, 7)
        assert torch.all(small >= m)
        assert torch.all(large >= small)

    def test_does_not_wrap_around_frame(self):
        m = torch.zeros(6, 6)
        m[0, 0] = 1
        out = dilate(m, 3)
        assert out[5, 5] == 0 and out.sum() == 4

    def test_preserves_batched_shapes(self):
        assert dilate(torch.zeros(2, 1, 8, 8), 3).shape == (2, 1, 8, 8)
        assert dilate(torch.zeros(1, 8, 8), 3).shape == (1, 8, 8)

    @pytest.mark.parametrize("kernel", [0, 2, -3])
    def test_rejects_invalid_kernel(self, kernel):
        with pytest.raises(DataValidationError):
            dilate(torch.zeros(4, 4), kernel)

    def test_rejects_non_binary_mask(self):
        with pytest.raises(DataValidationError):
            dilate(torch.full((4, 4), 0.5), 3)


class TestAnnulus:
    def test_ring_around_center(self):
        m = torch.zeros(5, 5)
        m[2, 2] = 1
        ring = annulus(m, 3)
        assert ring.sum() == 8
        assert ring[2, 2] == 0

    def test_all_ones_gives_empty_ring(self):
        assert annulus(torch.ones(6, 6), 5).sum() == 0

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_set_difference(self, seed):
        m = _random_mask(seed)
        expected = np.logical_and(_window_max_oracle(m.numpy(), 3) > 0, m.numpy() == 0)
        np.testing.assert_array_equal(annulus(m, 3).numpy(), expected.astype(np.float32))


class TestDownsampleMask:
    def test_all_ones(self):
        assert torch.equal(downsample_mask(torch.ones(8, 8), 4), torch.ones(2, 2))

    def test_single_pixel_block_mean(self):
        m = torch.zeros(4, 4)
        m[1, 2] = 1
        out = downsample_mask(m, 4)
        assert out.shape == (1, 1)
        assert out.item() == pytest.approx(1.0 / 16.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_block_mean_oracle_and_conserves_mass(self, seed):
        m = _random_mask(seed, p=0.4)
        out = downsample_mask(m, 4)
        np.testing.assert_allclose(out.numpy(), _block_mean_oracle(m.numpy(), 4), atol=1e-7)
        assert out.sum().item() * 16 == pytest.approx(m.sum().item(), abs=1e-4)

    def test_rejects_non_divisible_shape(self):
        with pytest.raises(DataValidationError):
            downsample_mask(torch.zeros(6, 6), 4)

    @pytest.mark.parametrize("factor", [0, -2, 1.5])
    def test_rejects_invalid_factor(self, factor):
        with pytest.raises(DataValidationError):
            downsample_mask(torch.zeros(8, 8), factor)


class TestBinarize:
    def test_above_threshold(self):
        assert torch.equal(binarize(torch.full((2, 2), 0.6), 0.5), torch.ones(2, 2))

    def test_tie_goes_to_zero(self):
        assert torch.equal(binarize(torch.full((2, 2), 0.5), 0.5), torch.zeros(2, 2))

    def test_elementwise_and_idempotent(self):
        torch.manual_seed(0)
        fm = torch.rand(6, 6)
        out = binarize(fm, 0.3)
        assert torch.equal(out, (fm > 0.3).float())
        assert torch.equal(binarize(out, 0.3), out)


class TestComposite:
    def test_zero_mask_gives_background(self):
        fg, bg = torch.rand(3, 4, 4), torch.rand(3, 4, 4)
        assert torch.equal(composite(fg, bg, torch.zeros(4, 4)), bg)

    def test_full_mask_gives_foreground(self):
        fg, bg = torch.rand(3, 4, 4), torch.rand(3, 4, 4)
        assert torch.equal(composite(fg, bg, torch.ones(4, 4)), fg)

    def test_per_pixel_select(self):
        torch.manual_seed(2)
        fg, bg = torch.rand(3, 8, 8), torch.rand(3, 8, 8)
        m = (torch.rand(8, 8) > 0.5).float()
        out = composite(fg, bg, m)
        expected = torch.where(m.bool().unsqueeze(0), fg, bg)
        assert torch.equal(out, expected)

    def test_same_image_is_identity(self):
        x = torch.rand(2, 3, 5, 5)
        assert torch.allclose(composite(x, x, _random_mask(1, size=5).expand(2, 1, 5, 5)), x)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DataValidationError):
            composite(torch.rand(3, 4, 4), torch.rand(3, 5, 5), torch.zeros(4, 4))
        with pytest.raises(DataValidationError):
            composite(torch.rand(3, 4, 4), torch.rand(3, 4, 4), torch.zeros(5, 5))
