"""
Denoiser condicional: encoder-decoder convolucional pequeno sobre latentes.

Entradas: z_t, incorporação senoidal do tempo e mapas de condicionamento
concatenados por canal na resolução latente. Saída com o formato de z_t.
"""

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn

from latent_camo.backend.conditioning import CONDITION_CHANNELS, Conditioning, conditioning_maps
from latent_camo.backend.schedule import NoiseSchedule, TimeLike, as_timesteps
from latent_camo.core.exceptions import DataValidationError
from latent_camo.utils.checkpoint import load_checkpoint, restore_module, save_checkpoint
from latent_camo.utils.config import BackendConfig


def timestep_embedding(timesteps: torch.Tensor, dim: int, max_period: float = 10000.0) -> torch.Tensor:
    """
    Incorporação senoidal de tempos contínuos.

    Args:
        timesteps: Tensor 1-D com N valores
        dim: Dimensão da saída

    Returns:
        torch.Tensor: (N, dim)
    """
    half = dim // 2
    freqs = torch.exp(
        -math.log(max_period) * torch.arange(half, dtype=torch.float64, device=timesteps.device) / half
    )
    args = timesteps.to(torch.float64)[:, None] * freqs[None, :]
    embedding = torch.cat([torch.cos(args), torch.sin(args)], dim=-1)
    if dim % 2:
        embedding = F.pad(embedding, (0, 1))
    return embedding


def _groups(channels: int) -> int:
    return math.gcd(8, channels)


class ResBlock(nn.Module):
    """Bloco residual com GroupNorm e injeção aditiva do tempo."""

    def __init__(self, in_channels: int, out_channels: int, time_dim: int):
        super().__init__()
        self.norm1 = nn.GroupNorm(_groups(in_channels), in_channels)
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, padding=1)
        self.time_proj = nn.Linear(time_dim, out_channels)
        self.norm2 = nn.GroupNorm(_groups(out_channels), out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)
        self.skip = (
            nn.Conv2d(in_channels, out_channels, 1) if in_channels != out_channels else nn.Identity()
        )

    def forward(self, x: torch.Tensor, t_emb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.time_proj(t_emb)[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return h + self.skip(x)


@dataclass
class DenoiserSpec:
    """Hiperparâmetros de arquitetura do denoiser."""

    latent_channels: int = 4
    hidden_channels: int = 64
    time_embedding_dim: int = 64
    condition_channels: int = CONDITION_CHANNELS

    @classmethod
    def from_config(cls, config: BackendConfig) -> "DenoiserSpec":
        return cls(
            latent_channels=config.latent_channels,
            hidden_channels=config.denoiser_hidden_channels,
            time_embedding_dim=config.time_embedding_dim,
        )


class ConditionalDenoiser(nn.Module):
    """
    Encoder-decoder com um nível de redução e conexão de atalho.

    O condicionamento entra por concatenação de canais (substitui o adaptador
    de convoluções zeradas sobre um backbone congelado).
    """

    def __init__(self, spec: Optional[DenoiserSpec] = None):
        super().__init__()
        self.spec = spec or DenoiserSpec()
        h = self.spec.hidden_channels
        t_dim = self.spec.time_embedding_dim

        self.time_mlp = nn.Sequential(nn.Linear(t_dim, t_dim * 2), nn.SiLU(), nn.Linear(t_dim * 2, t_dim))
        self.in_conv = nn.Conv2d(self.spec.latent_channels + self.spec.condition_channels, h, 3, padding=1)
        self.down_block = ResBlock(h, h, t_dim)
        self.downsample = nn.Conv2d(h, 2 * h, 3, stride=2, padding=1)
        self.mid_block = ResBlock(2 * h, 2 * h, t_dim)
        self.up_block = ResBlock(3 * h, h, t_dim)
        self.out_norm = nn.GroupNorm(_groups(h), h)
        self.out_conv = nn.Conv2d(h, self.spec.latent_channels, 3, padding=1)

    def forward(self, zt: torch.Tensor, t_input: torch.Tensor, cond_maps: torch.Tensor) -> torch.Tensor:
        """
        Args:
            zt: (B, C, h, w)
            t_input: (B,) valores contínuos do tempo
            cond_maps: (B, 8, h, w)
        """
        t_emb = self.time_mlp(timestep_embedding(t_input, self.spec.time_embedding_dim).to(zt.dtype))
        x = self.in_conv(torch.cat([zt, cond_maps], dim=1))
        skip = self.down_block(x, t_emb)
        x = self.mid_block(self.downsample(skip), t_emb)
        x = F.interpolate(x, size=skip.shape[-2:], mode="nearest")
        x = self.up_block(torch.cat([x, skip], dim=1), t_emb)
        return self.out_conv(F.silu(self.out_norm(x)))

    def save(self, directory: Path, config_hash: str = "", metadata: Optional[dict] = None) -> Path:
        return save_checkpoint(
            directory,
            self.state_dict(),
            kind="denoiser",
            config_hash=config_hash,
            model_config=asdict(self.spec),
            metadata=metadata,
        )

    @classmethod
    def load(cls, directory: Path) -> "ConditionalDenoiser":
        checkpoint = load_checkpoint(directory, expected_kind="denoiser")
        model = cls(DenoiserSpec(**checkpoint.model_config))
        restore_module(model, checkpoint)
        return model


def denoise(
    model: ConditionalDenoiser,
    zt: torch.Tensor,
    t: TimeLike,
    cond: Conditioning,
    schedule: NoiseSchedule,
) -> torch.Tensor:
    """
    Aplica o denoiser a z_t com o condicionamento reamostrado para a resolução latente.

    Args:
        model: Denoiser
        zt: Latente ruidoso (B, C, h, w)
        t: Tempo escalar ou (B,)
        cond: Condicionamento (com ou sem dimensão de lote)
        schedule: Agenda que define a entrada temporal

    Returns:
        torch.Tensor: Predição com o formato de zt

    Raises:
        DataValidationError: Formatos incompatíveis ou t fora da faixa
    """
    if zt.dim() != 4 or zt.shape[1] != model.spec.latent_channels:
        raise DataValidationError(
            f"zt deve ter formato (B, {model.spec.latent_channels}, h, w), recebido {tuple(zt.shape)}"
        )
    cond = cond.batched()
    batch = zt.shape[0]
    if cond.l_channel.shape[0] != batch:
        raise DataValidationError(
            f"Lote do condicionamento ({cond.l_channel.shape[0]}) difere do latente ({batch})"
        )
    height, width = cond.spatial_size
    if height < zt.shape[-2] or width < zt.shape[-1]:
        raise DataValidationError("Condicionamento com resolução menor que a do latente")

    t = as_timesteps(t, schedule)
    if t.dim() == 0:
        t = t.expand(batch)
    if t.shape != (batch,):
        raise DataValidationError(f"t deve ser escalar ou ({batch},), recebido {tuple(t.shape)}")

    maps = conditioning_maps(cond, tuple(zt.shape[-2:])).to(device=zt.device, dtype=zt.dtype)
    t_input = schedule.time_input(t).to(zt.device)
    return model(zt, t_input, maps)
