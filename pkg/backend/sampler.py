"""
Amostragem multi-passo determinística.

- Difusão: DDIM com η = 0 (sem ruído ancestral)
- Fluxo retificado: integração de Euler com passos uniformes de t = 1 a t = 0

Com `steps = 1`, ambos os modos retornam decode(one_step_estimate) no tempo inicial.
"""

import torch

from latent_camo.backend.autoencoder import LatentAutoencoder
from latent_camo.backend.conditioning import Conditioning
from latent_camo.backend.denoiser import ConditionalDenoiser, denoise
from latent_camo.backend.schedule import NoiseSchedule, one_step_estimate
from latent_camo.core.exceptions import DataValidationError


def initial_noise(shape: tuple, seed: int, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Ruído z_T reprodutível (gerador dedicado na CPU)."""
    generator = torch.Generator().manual_seed(int(seed))
    return torch.randn(shape, generator=generator, dtype=dtype)


def sample_latent(
    denoiser: ConditionalDenoiser,
    cond: Conditioning,
    z_init: torch.Tensor,
    steps: int,
    schedule: NoiseSchedule,
) -> torch.Tensor:
    """
    Integra do ruído z_init até o latente limpo.

    Raises:
        DataValidationError: Se steps < 1
    """
    if steps < 1:
        raise DataValidationError(f"steps deve ser >= 1, recebido {steps}")
    times = schedule.sampling_timesteps(steps)
    z = z_init

    if schedule.mode == "diffusion":
        for i, t in enumerate(times):
            pred = denoise(denoiser, z, t, cond, schedule)
            z0_hat = one_step_estimate(z, t, pred, schedule)
            if i == len(times) - 1:
                return z0_hat
            alpha_prev = schedule.alpha_bar(times[i + 1]).to(z.dtype)
            z = alpha_prev.sqrt() * z0_hat + (1 - alpha_prev).sqrt() * pred
        return z

    for i in range(steps):
        t, t_next = times[i], times[i + 1]
        pred = denoise(denoiser, z, t, cond, schedule)
        z = z + float(t_next - t) * schedule.velocity(pred)
    return z


def sample(
    denoiser: ConditionalDenoiser,
    cond: Conditioning,
    steps: int,
    seed: int,
    autoencoder: LatentAutoencoder,
    schedule: NoiseSchedule,
) -> torch.Tensor:
    """
    Gera imagens condicionadas por amostragem completa e decodifica.

    Args:
        denoiser: Denoiser treinado
        cond: Condicionamento (uma imagem ou lote)
        steps: Número de passos de amostragem
        seed: Semente do ruído inicial
        autoencoder: Autoencoder treinado
        schedule: Agenda de ruído do modo configurado

    Returns:
        torch.Tensor: Imagem(ns) em [0, 1], com ou sem dimensão de lote conforme `cond`

    Raises:
        DataValidationError: Se steps < 1
        NotReadyError: Se o autoencoder não estiver treinado
    """
    if steps < 1:
        raise DataValidationError(f"steps deve ser >= 1, recebido {steps}")
    batched = cond.is_batched
    cond = cond.batched()
    height, width = cond.spatial_size
    shape = (cond.l_channel.shape[0], *autoencoder.latent_shape(height, width))
    z_init = initial_noise(shape, seed)

    with torch.no_grad():
        z0 = sample_latent(denoiser, cond, z_init, steps, schedule)
        image = autoencoder.decode(z0)
    return image if batched else image[0]
