"""
Componente de perda: estilo.

Diferença L1 entre as médias dos atributos do crítico dentro da região do
veículo (estimado) e dentro da região de referência, somada sobre os estágios:

    L_s = Σ_l ‖ média_{m_x,l} F_l(ẑ₀ᵐ) − média_{m_s,l} F_l(z_refᵐ) ‖₁

As imagens são mascaradas antes da codificação e os latentes são mascarados
de novo após a codificação (pixels nulos não geram ativações latentes nulas).
"""

from typing import Optional, Sequence

import torch

from latent_camo.backend.autoencoder import LatentAutoencoder
from latent_camo.core.exceptions import DegenerateRegionError
from latent_camo.critic.model import LatentCritic, features, stage_masks
from latent_camo.critic.training import latent_mask
from latent_camo.optimization.losses._masks import as_batch_image, as_batch_mask


def region_mean(feature_map: torch.Tensor, mask: torch.Tensor, name: str) -> torch.Tensor:
    """
    Média dos vetores de atributos selecionados pela máscara, (B, C).

    Raises:
        DegenerateRegionError: Se a máscara não seleciona nenhuma célula
    """
    area = mask.flatten(start_dim=1).sum(dim=1)
    if (area <= 0).any():
        raise DegenerateRegionError(
            f"{name} desaparece na resolução {tuple(feature_map.shape[-2:])} do crítico"
        )
    return (feature_map * mask).sum(dim=(-2, -1)) / area[:, None]


def style_loss_from_latents(
    critic: LatentCritic,
    z_hat: torch.Tensor,
    mx_latent: torch.Tensor,
    z_ref: torch.Tensor,
    ms_latent: torch.Tensor,
    stages: Optional[Sequence[int]] = None,
    mask_mode: str = "max",
) -> torch.Tensor:
    """
    Perda de estilo a partir dos latentes e das máscaras binárias na resolução latente.

    Os latentes são mascarados aqui; células fora das máscaras não influenciam o valor.
    """
    selected = range(len(critic.stages)) if stages is None else stages
    mx_latent = mx_latent.to(z_hat.dtype)
    ms_latent = ms_latent.to(z_ref.dtype)
    feats_x = features(critic, z_hat * mx_latent)
    feats_s = features(critic, z_ref * ms_latent)
    masks_x = stage_masks(mx_latent, critic, mask_mode)
    masks_s = stage_masks(ms_latent, critic, mask_mode)

    total = z_hat.new_zeros(z_hat.shape[0])
    for l in selected:
        mean_x = region_mean(feats_x[l], masks_x[l], "Máscara do veículo")
        mean_s = region_mean(feats_s[l], masks_s[l], "Máscara de referência")
        total = total + (mean_x - mean_s).abs().sum(dim=1)
    return total.mean()


def style_loss(
    critic: LatentCritic,
    x_hat: torch.Tensor,
    m_x: torch.Tensor,
    x_s: torch.Tensor,
    m_s: torch.Tensor,
    encoder: LatentAutoencoder,
    stages: Optional[Sequence[int]] = None,
    mask_mode: str = "max",
    selection_threshold: float = 0.5,
) -> torch.Tensor:
    """
    Args:
        critic: Crítico latente treinado
        x_hat: Imagem estimada (..., 3, H, W)
        m_x: Máscara do veículo
        x_s: Imagem de referência (uma compartilhada ou uma por exemplo)
        m_s: Máscara de referência
        encoder: Autoencoder treinado
        stages: Estágios do crítico usados (padrão: todos)
        mask_mode: Redução das máscaras entre estágios ("max" ou "nearest")
        selection_threshold: Limiar da binarização das máscaras na resolução latente

    Returns:
        torch.Tensor: Escalar não negativo (média no lote)

    Raises:
        DegenerateRegionError: Máscara vazia em alguma resolução
    """
    x_hat = as_batch_image(x_hat)
    batch = x_hat.shape[0]
    x_s = as_batch_image(x_s)
    if x_s.shape[0] == 1 and batch > 1:
        x_s = x_s.expand(batch, -1, -1, -1)
    m_x = as_batch_mask(m_x, batch).to(x_hat.dtype)
    m_s = as_batch_mask(m_s, batch).to(x_s.dtype)

    mx_latent = latent_mask(m_x, encoder.factor, selection_threshold)
    ms_latent = latent_mask(m_s, encoder.factor, selection_threshold)
    z_hat = encoder.encode(x_hat * m_x)
    z_ref = encoder.encode(x_s * m_s)
    return style_loss_from_latents(critic, z_hat, mx_latent, z_ref, ms_latent, stages, mask_mode)


class StyleLoss:
    """
    Aproxima o estilo do veículo ao da região de referência.

    Mantém o crítico, o autoencoder e a configuração de estágios.
    """

    name = "style"

    def __init__(
        self,
        critic: LatentCritic,
        encoder: LatentAutoencoder,
        weight: float = 1.0,
        stages: Optional[Sequence[int]] = None,
        mask_mode: str = "max",
        selection_threshold: float = 0.5,
    ):
        self.critic = critic
        self.encoder = encoder
        self.weight = weight
        self.stages = stages
        self.mask_mode = mask_mode
        self.selection_threshold = selection_threshold

    def calculate(self, x_hat: torch.Tensor, m_x: torch.Tensor, x_s: torch.Tensor, m_s: torch.Tensor) -> torch.Tensor:
        return style_loss(
            self.critic, x_hat, m_x, x_s, m_s, self.encoder, self.stages, self.mask_mode, self.selection_threshold
        )
