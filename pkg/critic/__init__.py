"""Crítico latente (rede de atributos das perdas de estilo e de fundo)."""

from latent_camo.critic.model import (
    CriticSpec,
    LatentCritic,
    features,
    latent_perceptual_distance,
    normalize_channels,
    stage_masks,
)
from latent_camo.critic.training import (
    CriticTrainingResult,
    background_latents,
    critic_accuracy,
    cutout,
    latent_mask,
    train_critic,
)

__all__ = [
    "CriticSpec",
    "LatentCritic",
    "features",
    "latent_perceptual_distance",
    "normalize_channels",
    "stage_masks",
    "CriticTrainingResult",
    "background_latents",
    "critic_accuracy",
    "cutout",
    "latent_mask",
    "train_critic",
]
