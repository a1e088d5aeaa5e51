"""
Pacote de condicionamento do denoiser e sua reamostragem para a resolução latente.

Canais concatenados: L normalizado (1) + área de referência (3) + máscara do
veículo (1) + fundo (3, zeros na estratégia de nível de cena).
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import torch
import torch.nn.functional as F

from latent_camo.core.exceptions import DataValidationError

CONDITION_CHANNELS = 8


@dataclass
class Conditioning:
    """
    Condições de uma imagem (sem dimensão de lote) ou de um lote (com).

    Invariante: `background` presente sse a estratégia é de nível de imagem.
    """

    l_channel: torch.Tensor  # (..., 1, H, W)
    ref_area: torch.Tensor  # (..., 3, H, W)
    vehicle_mask: torch.Tensor  # (..., 1, H, W)
    background: Optional[torch.Tensor] = None  # (..., 3, H, W)

    @property
    def is_batched(self) -> bool:
        return self.l_channel.dim() == 4

    @property
    def spatial_size(self) -> Tuple[int, int]:
        return int(self.l_channel.shape[-2]), int(self.l_channel.shape[-1])

    def batched(self) -> "Conditioning":
        """Garante dimensão de lote."""
        if self.is_batched:
            return self
        return Conditioning(
            l_channel=self.l_channel.unsqueeze(0),
            ref_area=self.ref_area.unsqueeze(0),
            vehicle_mask=self.vehicle_mask.unsqueeze(0),
            background=None if self.background is None else self.background.unsqueeze(0),
        )

    def to(self, device: torch.device = None, dtype: torch.dtype = None) -> "Conditioning":
        def move(t: Optional[torch.Tensor]) -> Optional[torch.Tensor]:
            return None if t is None else t.to(device=device, dtype=dtype)

        return Conditioning(
            move(self.l_channel), move(self.ref_area), move(self.vehicle_mask), move(self.background)
        )

    @staticmethod
    def stack(items: Sequence["Conditioning"]) -> "Conditioning":
        """Empilha condicionamentos individuais em um lote."""
        if not items:
            raise DataValidationError("Lista de condicionamentos vazia")
        has_bg = [c.background is not None for c in items]
        if any(has_bg) and not all(has_bg):
            raise DataValidationError("Lote mistura condicionamentos com e sem fundo")
        return Conditioning(
            l_channel=torch.stack([c.l_channel for c in items]),
            ref_area=torch.stack([c.ref_area for c in items]),
            vehicle_mask=torch.stack([c.vehicle_mask for c in items]),
            background=torch.stack([c.background for c in items]) if all(has_bg) else None,
        )

    def maps(self) -> torch.Tensor:
        """Mapas concatenados (B, 8, H, W) na resolução da imagem."""
        cond = self.batched()
        background = cond.background
        if background is None:
            background = torch.zeros_like(cond.ref_area)
        return torch.cat([cond.l_channel, cond.ref_area, cond.vehicle_mask, background], dim=1)


def conditioning_maps(cond: Conditioning, latent_size: Tuple[int, int]) -> torch.Tensor:
    """
    Mapas de condicionamento reamostrados (vizinho mais próximo) para a resolução latente.

    Returns:
        torch.Tensor: (B, 8, h, w)
    """
    maps = cond.maps()
    if tuple(maps.shape[-2:]) == tuple(latent_size):
        return maps
    return F.interpolate(maps, size=tuple(latent_size), mode="nearest")
