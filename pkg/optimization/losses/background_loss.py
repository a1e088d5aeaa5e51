"""
Componente de perda: reconstrução do fundo.

Distância perceptual latente entre os fundos mascarados da imagem original
e da estimada:

    L_b = d(E(x₀ ⊙ (1 − m)) ⊙ (1 − m↓), E(x̂₀ ⊙ (1 − m)) ⊙ (1 − m↓))
"""

import torch

from latent_camo.backend.autoencoder import LatentAutoencoder
from latent_camo.core.exceptions import DataValidationError
from latent_camo.critic.model import LatentCritic, latent_perceptual_distance
from latent_camo.critic.training import background_latents
from latent_camo.optimization.losses._masks import as_batch_image, as_batch_mask, mask_area


def background_loss(
    critic: LatentCritic,
    x0: torch.Tensor,
    x_hat: torch.Tensor,
    m: torch.Tensor,
    encoder: LatentAutoencoder,
    selection_threshold: float = 0.5,
) -> torch.Tensor:
    """
    Raises:
        DegenerateRegionError: Máscara do veículo cobre todo o quadro
    """
    if x0.shape != x_hat.shape:
        raise DataValidationError(f"x0 e x_hat com formatos diferentes: {tuple(x0.shape)} vs {tuple(x_hat.shape)}")
    x0, x_hat = as_batch_image(x0), as_batch_image(x_hat)
    m = as_batch_mask(m, x0.shape[0]).to(x0.dtype)
    mask_area(1.0 - m, "Complemento da máscara do veículo")
    return latent_perceptual_distance(
        critic,
        background_latents(encoder, x0, m, selection_threshold),
        background_latents(encoder, x_hat, m, selection_threshold),
    )


class BackgroundLoss:
    """Mantém o fundo coerente com a imagem original (torna a estilização mais coerente)."""

    name = "background"

    def __init__(
        self,
        critic: LatentCritic,
        encoder: LatentAutoencoder,
        weight: float = 1.0,
        selection_threshold: float = 0.5,
    ):
        self.critic = critic
        self.encoder = encoder
        self.weight = weight
        self.selection_threshold = selection_threshold

    def calculate(self, x0: torch.Tensor, x_hat: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
        return background_loss(self.critic, x0, x_hat, m, self.encoder, self.selection_threshold)
