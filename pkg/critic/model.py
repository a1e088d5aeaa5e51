"""
Crítico latente: classificador convolucional de 3 estágios sobre latentes.

Os mapas de atributos de cada estágio alimentam a perda de estilo e a
distância perceptual latente (no espírito do LPIPS, mas sobre latentes).
"""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F
from torch import nn

from latent_camo.core.exceptions import DataValidationError, NotReadyError
from latent_camo.utils.checkpoint import load_checkpoint, restore_module, save_checkpoint
from latent_camo.utils.config import CriticConfig


@dataclass
class CriticSpec:
    """Hiperparâmetros de arquitetura do crítico."""

    latent_channels: int = 4
    channels: Tuple[int, int, int] = (32, 64, 128)
    num_classes: int = 5
    stage_weights: Tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        self.channels = tuple(int(c) for c in self.channels)
        self.stage_weights = tuple(float(w) for w in self.stage_weights)
        if self.num_classes < 2:
            raise DataValidationError(f"O crítico requer ao menos 2 classes, recebido {self.num_classes}")

    @classmethod
    def from_config(cls, config: CriticConfig, latent_channels: int, num_classes: int) -> "CriticSpec":
        return cls(
            latent_channels=latent_channels,
            channels=config.channels,
            num_classes=num_classes,
            stage_weights=config.stage_weights,
        )


def _stage(in_channels: int, out_channels: int, stride: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, 3, stride=stride, padding=1),
        nn.SiLU(),
        nn.Conv2d(out_channels, out_channels, 3, padding=1),
        nn.SiLU(),
    )


def normalize_channels(features: torch.Tensor, eps: float = 1e-10) -> torch.Tensor:
    """Normaliza cada vetor de atributos (dimensão de canal) para norma unitária."""
    norm = torch.sqrt((features**2).sum(dim=1, keepdim=True) + eps)
    return features / norm


class LatentCritic(nn.Module):
    """
    Tronco de 3 estágios (resolução latente, /2, /4) + cabeça linear separável.
    """

    def __init__(self, spec: Optional[CriticSpec] = None):
        super().__init__()
        self.spec = spec or CriticSpec()
        c1, c2, c3 = self.spec.channels
        self.stages = nn.ModuleList(
            [
                _stage(self.spec.latent_channels, c1, stride=1),
                _stage(c1, c2, stride=2),
                _stage(c2, c3, stride=2),
            ]
        )
        self.head = nn.Linear(c3, self.spec.num_classes)
        self.register_buffer("stage_weights", torch.tensor(self.spec.stage_weights, dtype=torch.float32))
        self.register_buffer("ready", torch.zeros(()))

    @property
    def is_ready(self) -> bool:
        return bool(self.ready.item() > 0)

    def mark_trained(self) -> None:
        self.ready.fill_(1.0)

    def _check_latent(self, z: torch.Tensor) -> None:
        if z.dim() != 4 or z.shape[1] != self.spec.latent_channels:
            raise DataValidationError(
                f"Latente deve ter formato (B, {self.spec.latent_channels}, h, w), recebido {tuple(z.shape)}"
            )

    def features(self, z: torch.Tensor) -> List[torch.Tensor]:
        """
        Mapas de atributos de cada estágio, em ordem.

        Raises:
            DataValidationError: Formato de latente incompatível
        """
        self._check_latent(z)
        outputs = []
        x = z
        for stage in self.stages:
            x = stage(x)
            outputs.append(x)
        return outputs

    def classify(self, z: torch.Tensor) -> torch.Tensor:
        """Logits de classe (pooling médio global sobre o último estágio)."""
        last = self.features(z)[-1]
        return self.head(last.mean(dim=(-2, -1)))

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.classify(z)

    def save(self, directory: Path, config_hash: str = "", metadata: Optional[dict] = None) -> Path:
        return save_checkpoint(
            directory,
            self.state_dict(),
            kind="critic",
            config_hash=config_hash,
            model_config=asdict(self.spec),
            metadata=metadata,
        )

    @classmethod
    def load(cls, directory: Path) -> "LatentCritic":
        checkpoint = load_checkpoint(directory, expected_kind="critic")
        model = cls(CriticSpec(**checkpoint.model_config))
        restore_module(model, checkpoint)
        model.eval()
        return model


def features(model: LatentCritic, z: torch.Tensor) -> List[torch.Tensor]:
    """
    Mapas de atributos por estágio de um crítico treinado.

    Raises:
        NotReadyError: Crítico não treinado
        DataValidationError: Formato incompatível
    """
    if not model.is_ready:
        raise NotReadyError("Crítico não treinado: treine ou carregue um checkpoint")
    return model.features(z)


def latent_perceptual_distance(
    model: LatentCritic,
    z1: torch.Tensor,
    z2: torch.Tensor,
    stages: Optional[Sequence[int]] = None,
) -> torch.Tensor:
    """
    Distância perceptual latente:

        d = média((z1 − z2)²) + Σ_l w_l · média((F̂_l(z1) − F̂_l(z2))²)

    com F̂_l normalizado por canal. Não negativa, simétrica e nula sse z1 = z2
    (o termo de pixel é estritamente positivo para qualquer diferença).

    Raises:
        DataValidationError: Latentes com formatos diferentes
    """
    if z1.shape != z2.shape:
        raise DataValidationError(f"Latentes com formatos diferentes: {tuple(z1.shape)} vs {tuple(z2.shape)}")
    selected = range(len(model.stages)) if stages is None else stages
    distance = ((z1 - z2) ** 2).mean()
    f1, f2 = features(model, z1), features(model, z2)
    weights = model.stage_weights.to(z1.dtype)
    for l in selected:
        diff = normalize_channels(f1[l]) - normalize_channels(f2[l])
        distance = distance + weights[l] * (diff**2).mean()
    return distance


def stage_masks(latent_mask: torch.Tensor, model: LatentCritic, mode: str = "max") -> List[torch.Tensor]:
    """
    Máscaras de seleção binárias na resolução de cada estágio do crítico.

    - "nearest": reamostragem por vizinho mais próximo
    - "max": a célula do estágio é selecionada se alguma célula do estágio anterior
      no seu campo receptivo (janela 3×3, stride 2) for

    Args:
        latent_mask: (B, 1, h, w) binária
        mode: "max" ou "nearest"
    """
    if mode not in ("max", "nearest"):
        raise DataValidationError(f"Modo de máscara de estágio desconhecido: {mode}")
    masks = [latent_mask]
    current = latent_mask
    for stage in list(model.stages)[1:]:
        conv: nn.Conv2d = stage[0]
        if mode == "max":
            current = F.max_pool2d(current, kernel_size=3, stride=conv.stride[0], padding=1)
        else:
            h = (current.shape[-2] - 1) // conv.stride[0] + 1
            w = (current.shape[-1] - 1) // conv.stride[1] + 1
            current = F.interpolate(current, size=(h, w), mode="nearest")
        masks.append(current)
    return masks
