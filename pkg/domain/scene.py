"""
Entidades de domínio: cena sintética, veículo e exemplar de conceito.

Estas são entidades de domínio, não DTOs. Imagens ficam em numpy HWC float32
quantizadas em k/255 (round trip PNG sem perdas); máscaras em uint8 {0, 1}.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np
import torch

from latent_camo.core.exceptions import DataValidationError
from latent_camo.utils.tensors import image_to_tensor, mask_to_tensor


@dataclass(frozen=True)
class Box:
    """Caixa alinhada aos eixos em pixels: canto superior esquerdo (x, y), largura e altura."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise DataValidationError(f"Caixa degenerada: {self}")

    @property
    def area(self) -> int:
        return self.w * self.h

    def to_xyxy(self) -> Tuple[float, float, float, float]:
        """Converte para (x1, y1, x2, y2) com x2/y2 exclusivos."""
        return (float(self.x), float(self.y), float(self.x + self.w), float(self.y + self.h))

    def to_list(self) -> List[int]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "Box":
        """Caixa justa ao redor dos pixels ativos da máscara."""
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        if rows.size == 0:
            raise DataValidationError("Máscara vazia não define caixa")
        return cls(
            x=int(cols[0]),
            y=int(rows[0]),
            w=int(cols[-1] - cols[0] + 1),
            h=int(rows[-1] - rows[0] + 1),
        )


@dataclass(frozen=True)
class VehicleGeometry:
    """
    Geometria do veículo procedural: retângulo de cantos arredondados.

    Um pixel (i, j) pertence ao veículo se o seu centro (j + 0.5, i + 0.5) está
    no retângulo [x, x + w) × [y, y + h) e, nas regiões de canto, a até `radius`
    do centro do arco.
    """

    x: int
    y: int
    w: int
    h: int
    radius: int

    def rasterize(self, height: int, width: int) -> np.ndarray:
        """Rasteriza a geometria em uma máscara uint8 (height, width)."""
        cy = np.arange(height, dtype=np.float64)[:, None] + 0.5
        cx = np.arange(width, dtype=np.float64)[None, :] + 0.5
        r = float(self.radius)
        inside = (cx >= self.x) & (cx < self.x + self.w) & (cy >= self.y) & (cy < self.y + self.h)
        dx = np.maximum(np.maximum(self.x + r - cx, cx - (self.x + self.w - r)), 0.0)
        dy = np.maximum(np.maximum(self.y + r - cy, cy - (self.y + self.h - r)), 0.0)
        return (inside & (dx**2 + dy**2 <= r**2)).astype(np.uint8)

    def to_dict(self) -> Dict[str, int]:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h, "radius": self.radius}


@dataclass
class SceneRecord:
    """
    Entidade de domínio: uma imagem sintética com um único veículo.

    Invariantes: máscara justa dentro da caixa; área da caixa >= 16 px².
    """

    record_id: str
    image: np.ndarray  # (H, W, 3) float32 em [0, 1]
    vehicle_mask: np.ndarray  # (H, W) uint8 em {0, 1}
    box: Box
    scene_label: str
    objects: List[str]
    seed: int
    split: str = "train"
    texture_family: str = ""
    geometry: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise DataValidationError(f"image deve ser HxWx3, recebido {self.image.shape}")
        if self.vehicle_mask.shape != self.image.shape[:2]:
            raise DataValidationError("vehicle_mask deve ter o mesmo H×W da imagem")
        if self.box.area < 16:
            raise DataValidationError(f"Área da caixa < 16 px² em {self.record_id}")

    @property
    def prompt(self) -> str:
        """Prompt textual no formato de metadados do corpus."""
        return f"an image of {self.scene_label} area with {', '.join(self.objects)}"

    @property
    def size(self) -> Tuple[int, int]:
        return int(self.image.shape[0]), int(self.image.shape[1])

    def image_tensor(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        """Imagem como tensor (3, H, W)."""
        return image_to_tensor(self.image, dtype)

    def mask_tensor(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        """Máscara do veículo como tensor (1, H, W)."""
        return mask_to_tensor(self.vehicle_mask, dtype)

    def metadata(self) -> Dict[str, Any]:
        """Metadados serializáveis (sem pixels)."""
        return {
            "record_id": self.record_id,
            "scene_label": self.scene_label,
            "objects": list(self.objects),
            "box": self.box.to_list(),
            "seed": self.seed,
            "split": self.split,
            "prompt": self.prompt,
            "texture_family": self.texture_family,
            "geometry": dict(self.geometry),
        }


@dataclass
class ConceptExemplar:
    """
    Entidade de domínio: exemplar procedural de um conceito de cena.

    Substitui o exemplar gerado e segmentado da estratégia de nível de cena.
    """

    image: np.ndarray  # (H, W, 3) float32
    concept_mask: np.ndarray  # (H, W) uint8
    concept_name: str
    scene_label: str
    seed: int = 0

    def __post_init__(self):
        if not self.concept_mask.any():
            raise DataValidationError(f"Máscara do conceito '{self.concept_name}' vazia")

    def image_tensor(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        return image_to_tensor(self.image, dtype)

    def mask_tensor(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        return mask_to_tensor(self.concept_mask, dtype)
