"""Backend generativo: autoencoder latente, agendas de ruído, denoiser condicional e amostrador."""

from latent_camo.backend.autoencoder import (
    AutoencoderSpec,
    LatentAutoencoder,
    freeze,
    psnr,
    train_autoencoder,
)
from latent_camo.backend.conditioning import Conditioning, conditioning_maps
from latent_camo.backend.denoiser import ConditionalDenoiser, DenoiserSpec, denoise, timestep_embedding
from latent_camo.backend.sampler import initial_noise, sample, sample_latent
from latent_camo.backend.schedule import (
    NoiseSchedule,
    estimate_clean_latent,
    forward_noise,
    one_step_estimate,
)

__all__ = [
    "AutoencoderSpec",
    "LatentAutoencoder",
    "freeze",
    "psnr",
    "train_autoencoder",
    "Conditioning",
    "conditioning_maps",
    "ConditionalDenoiser",
    "DenoiserSpec",
    "denoise",
    "timestep_embedding",
    "initial_noise",
    "sample",
    "sample_latent",
    "NoiseSchedule",
    "estimate_clean_latent",
    "forward_noise",
    "one_step_estimate",
]
