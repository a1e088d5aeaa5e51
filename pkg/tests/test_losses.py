"""Testes dos termos de perda e da perda composta."""

import copy
import math

import pytest
import torch

from latent_camo.core.exceptions import DataValidationError, DegenerateRegionError, InvalidConfigurationError
from latent_camo.detection.training import positive_cells
from latent_camo.imaging.colorspace import lab_to_rgb
from latent_camo.optimization.losses import (
    CompositeLoss,
    LossInputs,
    adversarial_loss,
    background_loss,
    color_consistency_loss,
    combine_stage1,
    combine_stage2,
    struct_loss,
    style_loss,
)
from latent_camo.utils.config import LossToggles, LossWeights


def _flat_lab(lightness: float, a: float = 0.0, b: float = 0.0, size: int = 8) -> torch.Tensor:
    lab = torch.empty(3, size, size, dtype=torch.float64)
    lab[0], lab[1], lab[2] = lightness, a, b
    return lab_to_rgb(lab)


def _box_mask(size: int = 8, top: int = 2, left: int = 2, side: int = 4) -> torch.Tensor:
    mask = torch.zeros(1, size, size, dtype=torch.float64)
    mask[:, top : top + side, left : left + side] = 1
    return mask


def _batch(records, n: int = 2):
    chosen = [r for r in records if positive_cells(r.mask_tensor()).any()][:n]
    x0 = torch.stack([r.image_tensor() for r in chosen])
    mask = torch.stack([r.mask_tensor() for r in chosen])
    return x0, mask


@pytest.fixture
def uniform_detector(detector):
    """Detector com cabeça nula: logits constantes iguais ao viés."""
    model = copy.deepcopy(detector)
    with torch.no_grad():
        model.head.weight.zero_()
        model.head.bias.zero_()
    return model


def _single_cell_mask() -> torch.Tensor:
    mask = torch.zeros(1, 32, 32)
    mask[:, 10:15, 2:7] = 1  # contém apenas o centro (12, 4)
    return mask


class TestStructLoss:
    def test_lightness_offset(self):
        x0, x_hat, mask = _flat_lab(50.0), _flat_lab(70.0), _box_mask()
        assert struct_loss(x0, x_hat, mask).item() == pytest.approx(0.04, abs=1e-6)

    def test_zero_for_identical(self):
        x = torch.rand(3, 8, 8, dtype=torch.float64)
        assert struct_loss(x, x.clone(), _box_mask()).item() == 0.0

    def test_ignores_pixels_outside_mask(self):
        mask = _box_mask()
        x0, x_hat = torch.rand(3, 8, 8, dtype=torch.float64), torch.rand(3, 8, 8, dtype=torch.float64)
        changed = x_hat * mask + torch.rand_like(x_hat) * (1 - mask)
        assert struct_loss(x0, changed, mask).item() == pytest.approx(struct_loss(x0, x_hat, mask).item())

    def test_empty_mask(self):
        with pytest.raises(DegenerateRegionError):
            struct_loss(torch.rand(3, 8, 8), torch.rand(3, 8, 8), torch.zeros(8, 8))

    def test_shape_mismatch(self):
        with pytest.raises(DataValidationError):
            struct_loss(torch.rand(3, 8, 8), torch.rand(3, 8, 16), torch.ones(8, 8))


class TestColorConsistencyLoss:
    def test_chroma_offset(self):
        # a desloca 25.5 → canal normalizado desloca 0.1
        x1, x2 = _flat_lab(50.0, a=0.0), _flat_lab(50.0, a=25.5)
        assert color_consistency_loss(x1, x2, _box_mask()).item() == pytest.approx(0.01, abs=1e-6)

    def test_zero_for_identical(self):
        x = torch.rand(2, 3, 8, 8, dtype=torch.float64)
        assert color_consistency_loss(x, x.clone(), _box_mask()).item() == 0.0

    def test_empty_mask(self):
        with pytest.raises(DegenerateRegionError):
            color_consistency_loss(torch.rand(3, 8, 8), torch.rand(3, 8, 8), torch.zeros(1, 8, 8))


class TestAdversarialLoss:
    def test_uniform_logits(self, uniform_detector):
        value = adversarial_loss(uniform_detector, torch.rand(3, 32, 32), _single_cell_mask())
        assert value.item() == pytest.approx(math.log(2.0), rel=1e-6)

    def test_vehicle_biased_logits(self, uniform_detector):
        with torch.no_grad():
            uniform_detector.head.bias[1] = 2.0
        value = adversarial_loss(uniform_detector, torch.rand(3, 32, 32), _single_cell_mask())
        assert value.item() == pytest.approx(math.log(1.0 + math.exp(2.0)), rel=1e-6)

    def test_mean_over_cells_is_count_free(self, uniform_detector):
        full = torch.ones(1, 32, 32)
        value = adversarial_loss(uniform_detector, torch.rand(3, 32, 32), full)
        assert value.item() == pytest.approx(math.log(2.0), rel=1e-6)

    def test_empty_mask(self, detector):
        with pytest.raises(DegenerateRegionError):
            adversarial_loss(detector, torch.rand(3, 32, 32), torch.zeros(1, 32, 32))

    def test_detector_not_updated(self, detector, records):
        x0, mask = _batch(records)
        before = {k: v.clone() for k, v in detector.state_dict().items()}
        adversarial_loss(detector, x0.requires_grad_(True), mask).backward()
        assert all(torch.equal(before[k], v) for k, v in detector.state_dict().items())


class TestStyleLoss:
    def test_zero_against_itself(self, critic, autoencoder, records):
        x0, mask = _batch(records)
        assert style_loss(critic, x0, mask, x0, mask, autoencoder).item() == pytest.approx(0.0, abs=1e-6)

    def test_outside_mask_does_not_matter(self, critic, autoencoder, records):
        x0, mask = _batch(records)
        reference, ref_mask = x0.flip(0), mask.flip(0)
        noisy = x0 * mask + torch.rand_like(x0) * (1 - mask)
        a = style_loss(critic, x0, mask, reference, ref_mask, autoencoder)
        b = style_loss(critic, noisy, mask, reference, ref_mask, autoencoder)
        assert a.item() == pytest.approx(b.item(), rel=1e-5, abs=1e-7)

    def test_shared_reference_broadcasts(self, critic, autoencoder, records):
        x0, mask = _batch(records)
        value = style_loss(critic, x0, mask, x0[0], mask[0], autoencoder)
        assert value.dim() == 0 and value.item() >= 0

    def test_empty_mask(self, critic, autoencoder, records):
        x0, mask = _batch(records)
        with pytest.raises(DegenerateRegionError):
            style_loss(critic, x0, torch.zeros_like(mask), x0, mask, autoencoder)


class TestBackgroundLoss:
    def test_zero_for_identical(self, critic, autoencoder, records):
        x0, mask = _batch(records)
        assert background_loss(critic, x0, x0.clone(), mask, autoencoder).item() == pytest.approx(0.0, abs=1e-9)

    def test_vehicle_pixels_do_not_matter(self, critic, autoencoder, records):
        x0, mask = _batch(records)
        x_hat = torch.rand_like(x0)
        repainted = x_hat * (1 - mask) + torch.rand_like(x0) * mask
        a = background_loss(critic, x0, x_hat, mask, autoencoder)
        b = background_loss(critic, x0, repainted, mask, autoencoder)
        assert a.item() == pytest.approx(b.item(), rel=1e-5)

    def test_full_frame_mask(self, critic, autoencoder):
        with pytest.raises(DegenerateRegionError):
            background_loss(critic, torch.rand(3, 32, 32), torch.rand(3, 32, 32), torch.ones(1, 32, 32), autoencoder)


class TestCombine:
    TERMS1 = {"struct": 1.0, "style": 2.0, "background": 3.0}
    TERMS2 = {**TERMS1, "adversarial": 5.0, "color": 1.0}
    WEIGHTS = LossWeights(struct=2.0, alpha=3.0, beta=4.0, lambda_=0.5, gamma=2.0)

    def test_stage1(self):
        assert combine_stage1(self.TERMS1, self.WEIGHTS) == pytest.approx(20.0)

    def test_stage2(self):
        assert combine_stage2(self.TERMS2, self.WEIGHTS) == pytest.approx(24.5)

    def test_missing_term(self):
        with pytest.raises(DataValidationError):
            combine_stage2(self.TERMS1, self.WEIGHTS)

    def test_stage2_term_in_stage1(self):
        with pytest.raises(DataValidationError):
            combine_stage1(self.TERMS2, self.WEIGHTS)

    def test_negative_weight_rejected(self):
        with pytest.raises(InvalidConfigurationError):
            LossWeights(alpha=-1.0)

    def test_preset(self):
        weights = LossWeights.preset("coco/faster_rcnn/scene_level", "no_box")
        assert weights.struct == 5.0 and weights.beta == 0.0

    def test_unknown_preset(self):
        with pytest.raises(InvalidConfigurationError):
            LossWeights.preset("voc/ssd/image_level", "no_box")


class TestCompositeLoss:
    def _inputs(self, records, with_stage1: bool = True) -> LossInputs:
        x0, mask = _batch(records)
        x_hat = (x0 * 0.8 + 0.1).requires_grad_(True)
        return LossInputs(
            x0=x0,
            x_hat=x_hat,
            mask=mask,
            x_s=x0.flip(0),
            m_s=mask.flip(0),
            x_stage1=x0.clone() if with_stage1 else None,
        )

    def test_no_box_terms(self, critic, autoencoder, records):
        loss = CompositeLoss("no_box", LossWeights(), critic, autoencoder)
        terms = loss.compute_terms(self._inputs(records))
        assert set(terms) == {"struct", "style", "background"}
        assert all(v.item() >= 0 for v in terms.values())

    def test_report_total_matches_combination(self, critic, autoencoder, detector, records):
        weights = LossWeights(struct=2.0, alpha=0.5, beta=1.5, lambda_=0.7, gamma=2.0)
        loss = CompositeLoss("white_box", weights, critic, autoencoder, detector)
        terms = loss.compute_terms(self._inputs(records))
        total = loss.calculate(terms)
        report = loss.report(3, terms)
        assert report.step == 3
        assert report.total == pytest.approx(float(total), rel=1e-5)
        assert report.total == pytest.approx(report.recomputed_total(), abs=1e-6)

    def test_gradient_reaches_estimate(self, critic, autoencoder, detector, records):
        inputs = self._inputs(records)
        loss = CompositeLoss("white_box", LossWeights(), critic, autoencoder, detector)
        loss.calculate(loss.compute_terms(inputs)).backward()
        assert inputs.x_hat.grad is not None
        assert torch.isfinite(inputs.x_hat.grad).all() and inputs.x_hat.grad.abs().sum() > 0

    def test_toggled_term_is_zero(self, critic, autoencoder, detector, records):
        loss = CompositeLoss(
            "white_box", LossWeights(), critic, autoencoder, detector, toggles=LossToggles(style=False)
        )
        assert not loss.is_active("style")
        assert loss.compute_terms(self._inputs(records))["style"].item() == 0.0

    def test_zero_weight_term_is_zero(self, critic, autoencoder, records):
        loss = CompositeLoss("no_box", LossWeights(beta=0.0), critic, autoencoder)
        assert loss.compute_terms(self._inputs(records))["background"].item() == 0.0

    def test_color_requires_stage1_output(self, critic, autoencoder, detector, records):
        loss = CompositeLoss("white_box", LossWeights(), critic, autoencoder, detector)
        with pytest.raises(DataValidationError):
            loss.compute_terms(self._inputs(records, with_stage1=False))

    def test_detector_required_outside_no_box(self, critic, autoencoder):
        with pytest.raises(InvalidConfigurationError):
            CompositeLoss("one_stage", LossWeights(), critic, autoencoder)

    def test_unknown_stage(self, critic, autoencoder):
        with pytest.raises(InvalidConfigurationError):
            CompositeLoss("black_box", LossWeights(), critic, autoencoder)


GRADCHECK = dict(eps=1e-6, atol=1e-5, rtol=1e-3)


def _interior(shape, seed: int) -> torch.Tensor:
    """Imagem float64 em [0.1, 0.9], longe dos limites de validação e dos ramos lineares do sRGB."""
    generator = torch.Generator().manual_seed(seed)
    return 0.1 + 0.8 * torch.rand(*shape, generator=generator, dtype=torch.float64)


def _square(size: int, top: int, side: int) -> torch.Tensor:
    mask = torch.zeros(1, 1, size, size, dtype=torch.float64)
    mask[..., top : top + side, top : top + side] = 1
    return mask


class TestGradients:
    """Gradientes analíticos contra diferenças finitas (float64)."""

    @pytest.fixture
    def models64(self, critic, autoencoder, detector):
        return copy.deepcopy(critic).double(), copy.deepcopy(autoencoder).double(), copy.deepcopy(detector).double()

    def test_struct_loss(self):
        x0 = _interior((1, 3, 8, 8), 0)
        x_hat = _interior((1, 3, 8, 8), 1).requires_grad_(True)
        mask = _square(8, 2, 4)
        assert torch.autograd.gradcheck(lambda x: struct_loss(x0, x, mask), (x_hat,), **GRADCHECK)

    def test_color_consistency_loss(self):
        x_stage1 = _interior((1, 3, 8, 8), 2)
        x_stage2 = _interior((1, 3, 8, 8), 3).requires_grad_(True)
        mask = _square(8, 2, 4)
        assert torch.autograd.gradcheck(
            lambda x: color_consistency_loss(x_stage1, x, mask), (x_stage2,), **GRADCHECK
        )

    def test_style_loss(self, models64):
        critic64, encoder64, _ = models64
        x_hat = _interior((1, 3, 16, 16), 4).requires_grad_(True)
        x_s = _interior((1, 3, 16, 16), 5)
        m_x, m_s = _square(16, 4, 8), _square(16, 0, 6)
        assert torch.autograd.gradcheck(
            lambda x: style_loss(critic64, x, m_x, x_s, m_s, encoder64), (x_hat,), **GRADCHECK
        )

    def test_background_loss(self, models64):
        critic64, encoder64, _ = models64
        x0 = _interior((1, 3, 16, 16), 6)
        x_hat = _interior((1, 3, 16, 16), 7).requires_grad_(True)
        mask = _square(16, 4, 8)
        assert torch.autograd.gradcheck(
            lambda x: background_loss(critic64, x0, x, mask, encoder64), (x_hat,), **GRADCHECK
        )

    def test_adversarial_loss(self, models64):
        _, _, detector64 = models64
        x_comp = _interior((1, 3, 16, 16), 8).requires_grad_(True)
        mask = _square(16, 4, 8)
        assert torch.autograd.gradcheck(lambda x: adversarial_loss(detector64, x, mask), (x_comp,), **GRADCHECK)
