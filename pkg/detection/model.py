"""
Detectores de brinquedo por células (grade G × G, stride 8).

Cada célula prevê logits (fundo, veículo) e deslocamentos da caixa
(tx, ty, tw, th) relativos à célula:

    cx = (col + 0.5) · s + tx · s        w = s · exp(tw)
    cy = (row + 0.5) · s + ty · s        h = s · exp(th)

Duas arquiteturas distintas servem de alvo caixa branca (wide_shallow) e de
alvo de transferência caixa preta (narrow_deep).
"""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import torch
from torch import nn

from latent_camo.core.exceptions import DataValidationError, InvalidConfigurationError, NotReadyError
from latent_camo.utils.checkpoint import load_checkpoint, restore_module, save_checkpoint
from latent_camo.utils.validators import validate_rgb_image

BACKGROUND_CLASS = 0
VEHICLE_CLASS = 1
CELL_SIZE = 8
_MAX_LOG_SCALE = 4.0

# Canais por estágio de stride 2 e número de convoluções extras por estágio
VARIANTS: Dict[str, Dict[str, Tuple[int, ...]]] = {
    "wide_shallow": {"channels": (48, 96, 128), "extra_convs": (0, 0, 0)},
    "narrow_deep": {"channels": (16, 24, 32), "extra_convs": (2, 2, 2)},
}


@dataclass
class DetectorSpec:
    """Arquitetura do detector."""

    variant: str = "wide_shallow"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidConfigurationError(
                f"Variante de detector desconhecida: {self.variant}. Opções: {', '.join(VARIANTS)}"
            )


class ToyDetector(nn.Module):
    """
    Backbone convolucional com três reduções por 2 e cabeça 1×1 por célula.
    """

    def __init__(self, spec: Optional[DetectorSpec] = None):
        super().__init__()
        self.spec = spec or DetectorSpec()
        layout = VARIANTS[self.spec.variant]
        layers: List[nn.Module] = []
        in_channels = 3
        for channels, extra in zip(layout["channels"], layout["extra_convs"]):
            layers += [nn.Conv2d(in_channels, channels, 3, stride=2, padding=1), nn.SiLU()]
            for _ in range(extra):
                layers += [nn.Conv2d(channels, channels, 3, padding=1), nn.SiLU()]
            in_channels = channels
        self.backbone = nn.Sequential(*layers)
        self.head = nn.Conv2d(in_channels, 6, 1)
        self.register_buffer("ready", torch.zeros(()))

    @property
    def variant(self) -> str:
        return self.spec.variant

    @property
    def is_ready(self) -> bool:
        return bool(self.ready.item() > 0)

    def mark_trained(self) -> None:
        self.ready.fill_(1.0)

    def forward(self, images: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Args:
            images: (B, 3, H, W) com H e W múltiplos de 8

        Returns:
            (logits (B, G, G, 2), offsets (B, G, G, 4))
        """
        if images.dim() != 4:
            raise DataValidationError(f"Entrada deve ser (B, 3, H, W), recebido {tuple(images.shape)}")
        validate_rgb_image(images, "images")
        h, w = images.shape[-2:]
        if h % CELL_SIZE or w % CELL_SIZE:
            raise DataValidationError(f"H e W devem ser múltiplos de {CELL_SIZE}, recebido {h}×{w}")
        out = self.head(self.backbone(images)).permute(0, 2, 3, 1)
        return out[..., :2], out[..., 2:]

    def save(self, directory: Path, config_hash: str = "", metadata: Optional[dict] = None) -> Path:
        return save_checkpoint(
            directory,
            self.state_dict(),
            kind="detector",
            config_hash=config_hash,
            model_config=asdict(self.spec),
            metadata=metadata,
        )

    @classmethod
    def load(cls, directory: Path) -> "ToyDetector":
        checkpoint = load_checkpoint(directory, expected_kind="detector")
        model = cls(DetectorSpec(**checkpoint.model_config))
        restore_module(model, checkpoint)
        model.eval()
        return model


def require_ready(model: ToyDetector) -> None:
    """
    Raises:
        NotReadyError: Detector não treinado
    """
    if not model.is_ready:
        raise NotReadyError(f"Detector '{model.variant}' não treinado")


def cell_centers(grid_h: int, grid_w: int, cell: int = CELL_SIZE) -> Tuple[torch.Tensor, torch.Tensor]:
    """Coordenadas inteiras (linha, coluna) do pixel central de cada célula."""
    rows = torch.arange(grid_h) * cell + cell // 2
    cols = torch.arange(grid_w) * cell + cell // 2
    return rows, cols


def decode_boxes(offsets: torch.Tensor, image_size: Tuple[int, int], cell: int = CELL_SIZE) -> torch.Tensor:
    """
    Converte deslocamentos (..., G, G, 4) em caixas (x1, y1, x2, y2) limitadas ao quadro.
    """
    grid_h, grid_w = offsets.shape[-3], offsets.shape[-2]
    height, width = image_size
    rows = torch.arange(grid_h, dtype=offsets.dtype, device=offsets.device)[:, None]
    cols = torch.arange(grid_w, dtype=offsets.dtype, device=offsets.device)[None, :]
    cx = (cols + 0.5) * cell + offsets[..., 0] * cell
    cy = (rows + 0.5) * cell + offsets[..., 1] * cell
    bw = cell * torch.exp(offsets[..., 2].clamp(-_MAX_LOG_SCALE, _MAX_LOG_SCALE))
    bh = cell * torch.exp(offsets[..., 3].clamp(-_MAX_LOG_SCALE, _MAX_LOG_SCALE))
    x1 = (cx - bw / 2).clamp(0, width)
    y1 = (cy - bh / 2).clamp(0, height)
    x2 = (cx + bw / 2).clamp(0, width)
    y2 = (cy + bh / 2).clamp(0, height)
    return torch.stack([x1, y1, x2, y2], dim=-1)


def encode_box_targets(box_xyxy: Tuple[float, float, float, float], grid: int, cell: int = CELL_SIZE) -> torch.Tensor:
    """Alvos (tx, ty, tw, th) de cada célula (G, G, 4) para uma caixa de verdade."""
    x1, y1, x2, y2 = box_xyxy
    gcx, gcy = (x1 + x2) / 2, (y1 + y2) / 2
    gw, gh = max(x2 - x1, 1e-6), max(y2 - y1, 1e-6)
    rows = torch.arange(grid, dtype=torch.float32)[:, None].expand(grid, grid)
    cols = torch.arange(grid, dtype=torch.float32)[None, :].expand(grid, grid)
    tx = (gcx - (cols + 0.5) * cell) / cell
    ty = (gcy - (rows + 0.5) * cell) / cell
    tw = torch.full((grid, grid), float(torch.log(torch.tensor(gw / cell))))
    th = torch.full((grid, grid), float(torch.log(torch.tensor(gh / cell))))
    return torch.stack([tx, ty, tw, th], dim=-1)
