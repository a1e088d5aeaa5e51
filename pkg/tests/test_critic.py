"""Testes do crítico latente e do seu treino."""

import copy

import pytest
import torch

from latent_camo.core.exceptions import DataValidationError, NotReadyError
from latent_camo.critic.model import (
    CriticSpec,
    LatentCritic,
    features,
    latent_perceptual_distance,
    normalize_channels,
    stage_masks,
)
from latent_camo.critic import training as critic_training
from latent_camo.critic.training import background_latents, critic_accuracy, cutout, latent_mask, train_critic
from latent_camo.utils.config import SCENE_LABELS, CriticConfig


def _latent(seed: int, shape=(2, 4, 16, 16), dtype=torch.float32) -> torch.Tensor:
    return torch.randn(*shape, generator=torch.Generator().manual_seed(seed), dtype=dtype)


class TestFeatures:
    def test_stage_shapes(self, critic):
        maps = features(critic, _latent(0))
        assert [tuple(m.shape) for m in maps] == [(2, 8, 16, 16), (2, 8, 8, 8), (2, 8, 4, 4)]

    def test_untrained_critic_raises(self):
        with pytest.raises(NotReadyError):
            features(LatentCritic(CriticSpec(latent_channels=4, channels=(8, 8, 8))), _latent(0))

    def test_wrong_latent_channels(self, critic):
        with pytest.raises(DataValidationError):
            features(critic, _latent(0, shape=(1, 3, 16, 16)))

    def test_classify_shape(self, critic):
        assert critic.classify(_latent(1)).shape == (2, 5)

    def test_single_class_rejected(self):
        with pytest.raises(DataValidationError):
            CriticSpec(num_classes=1)

    def test_normalize_channels_unit_norm(self):
        normalized = normalize_channels(_latent(2))
        torch.testing.assert_close(normalized.norm(dim=1), torch.ones(2, 16, 16), atol=1e-5, rtol=0)

    def test_checkpoint_round_trip(self, critic, tmp_path):
        critic.save(tmp_path / "critic", metadata={"labels": list(SCENE_LABELS)})
        loaded = LatentCritic.load(tmp_path / "critic")
        assert loaded.is_ready
        z = _latent(3)
        with torch.no_grad():
            for a, b in zip(features(loaded, z), features(critic, z)):
                torch.testing.assert_close(a, b)


class TestPerceptualDistance:
    def test_zero_for_identical(self, critic):
        z = _latent(4)
        assert latent_perceptual_distance(critic, z, z.clone()).item() == pytest.approx(0.0, abs=1e-12)

    def test_symmetric_and_positive(self, critic):
        a, b = _latent(5), _latent(6)
        d_ab = latent_perceptual_distance(critic, a, b)
        d_ba = latent_perceptual_distance(critic, b, a)
        assert d_ab.item() > 0
        assert d_ab.item() == pytest.approx(d_ba.item(), rel=1e-6)

    def test_stage_selection_reduces_distance(self, critic):
        a, b = _latent(7), _latent(8)
        assert latent_perceptual_distance(critic, a, b, stages=[0]) <= latent_perceptual_distance(critic, a, b)

    def test_shape_mismatch(self, critic):
        with pytest.raises(DataValidationError):
            latent_perceptual_distance(critic, _latent(0), _latent(0, shape=(1, 4, 16, 16)))

    def test_gradcheck(self, critic):
        critic64 = copy.deepcopy(critic).double()
        z1 = _latent(9, shape=(1, 4, 8, 8), dtype=torch.float64).requires_grad_(True)
        z2 = _latent(10, shape=(1, 4, 8, 8), dtype=torch.float64)
        assert torch.autograd.gradcheck(
            lambda z: latent_perceptual_distance(critic64, z, z2), (z1,), eps=1e-6, atol=1e-5, rtol=1e-3
        )


class TestStageMasks:
    def test_max_mode_keeps_single_cell(self, critic):
        mask = torch.zeros(1, 1, 16, 16)
        mask[0, 0, 5, 9] = 1
        levels = stage_masks(mask, critic, "max")
        assert [tuple(m.shape[-2:]) for m in levels] == [(16, 16), (8, 8), (4, 4)]
        assert all(m.sum() > 0 for m in levels)

    def test_nearest_mode_shapes(self, critic):
        levels = stage_masks(torch.ones(2, 1, 16, 16), critic, "nearest")
        assert [tuple(m.shape) for m in levels] == [(2, 1, 16, 16), (2, 1, 8, 8), (2, 1, 4, 4)]
        assert all(torch.equal(m, torch.ones_like(m)) for m in levels)

    def test_unknown_mode(self, critic):
        with pytest.raises(DataValidationError):
            stage_masks(torch.ones(1, 1, 16, 16), critic, "mean")


class TestCutout:
    def test_zeroes_one_rectangle_per_example(self):
        z = torch.ones(3, 2, 8, 8, requires_grad=True)
        out = cutout(z, torch.Generator().manual_seed(0), fraction=0.5)
        zeros_per_example = (out[:, 0] == 0).flatten(start_dim=1).sum(dim=1)
        assert zeros_per_example.tolist() == [16, 16, 16]
        assert torch.equal(out[:, 0], out[:, 1])

    def test_gradient_passes_outside_rectangle(self):
        z = torch.ones(2, 1, 8, 8, requires_grad=True)
        out = cutout(z, torch.Generator().manual_seed(1), fraction=0.25)
        out.sum().backward()
        assert torch.equal(z.grad, out.detach())

    def test_reproducible(self):
        z = torch.ones(4, 1, 8, 8)
        a = cutout(z, torch.Generator().manual_seed(3))
        b = cutout(z, torch.Generator().manual_seed(3))
        assert torch.equal(a, b)


class TestBackgroundLatents:
    def test_latent_mask_binarizes_block_mean(self):
        mask = torch.zeros(1, 1, 4, 4)
        mask[..., :2, :2] = 1
        mask[..., 2, 2] = 1
        expected = torch.tensor([[[[1.0, 0.0], [0.0, 0.0]]]])
        assert torch.equal(latent_mask(mask, 2), expected)

    def test_threshold_changes_latent_mask(self):
        mask = torch.zeros(1, 1, 4, 4)
        mask[..., 0, :2] = 1  # bloco superior esquerdo com média 0.5
        assert torch.count_nonzero(latent_mask(mask, 2)) == 0
        expected = torch.tensor([[[[1.0, 0.0], [0.0, 0.0]]]])
        assert torch.equal(latent_mask(mask, 2, threshold=0.25), expected)

    def test_threshold_reaches_background_latents(self, autoencoder, records):
        images = torch.stack([r.image_tensor() for r in records[:2]])
        masks = torch.stack([r.mask_tensor() for r in records[:2]])
        latents = background_latents(autoencoder, images, masks, threshold=0.1)
        inside = latent_mask(masks, autoencoder.factor, 0.1).expand_as(latents) > 0
        assert torch.count_nonzero(latents[inside]) == 0
        assert inside.sum() >= (latent_mask(masks, autoencoder.factor).expand_as(latents) > 0).sum()

    def test_vehicle_cells_are_zeroed(self, autoencoder, records):
        images = torch.stack([r.image_tensor() for r in records[:2]])
        masks = torch.stack([r.mask_tensor() for r in records[:2]])
        latents = background_latents(autoencoder, images, masks)
        inside = latent_mask(masks, autoencoder.factor).expand_as(latents) > 0
        assert latents.shape == (2, 4, 16, 16)
        assert torch.count_nonzero(latents[inside]) == 0


class TestTrainCritic:
    def test_trains_ready_model(self, autoencoder, records):
        config = CriticConfig(channels=(8, 8, 8), epochs=1, batch_size=4)
        result = train_critic(records, autoencoder, config, SCENE_LABELS, seed=0)
        assert result.model.is_ready
        assert result.labels == SCENE_LABELS
        assert 0.0 <= result.train_accuracy <= 1.0
        assert len(result.history) == 1
        assert critic_accuracy(result.model, autoencoder, records, SCENE_LABELS) == pytest.approx(result.train_accuracy)

    def test_uses_selection_threshold(self, autoencoder, records, mocker):
        spy = mocker.spy(critic_training, "background_latents")
        config = CriticConfig(channels=(8, 8, 8), epochs=1, batch_size=4, selection_threshold=0.3)
        result = train_critic(records, autoencoder, config, SCENE_LABELS, seed=0)
        assert spy.call_args_list
        assert all(call.args[3] == 0.3 for call in spy.call_args_list)
        spy.reset_mock()
        critic_accuracy(result.model, autoencoder, records, SCENE_LABELS, selection_threshold=0.3)
        assert all(call.args[3] == 0.3 for call in spy.call_args_list)

    def test_requires_two_classes(self, autoencoder, records):
        with pytest.raises(DataValidationError):
            train_critic(records, autoencoder, CriticConfig(channels=(8, 8, 8)), ["urban"], seed=0)

    def test_empty_corpus(self, autoencoder):
        with pytest.raises(DataValidationError):
            train_critic([], autoencoder, CriticConfig(channels=(8, 8, 8)), SCENE_LABELS, seed=0)

    def test_scene_outside_labels(self, autoencoder, records):
        with pytest.raises(DataValidationError):
            train_critic(records, autoencoder, CriticConfig(channels=(8, 8, 8), epochs=1), ["urban", "rural"], seed=0)
