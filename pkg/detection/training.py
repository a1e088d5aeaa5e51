"""
Treino dos detectores de brinquedo: classificação por célula (CE ponderada)
mais regressão de caixa (smooth-L1) nas células positivas.

Célula positiva: o pixel central da célula está dentro da máscara do veículo.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import torch
import torch.nn.functional as F
from tqdm import tqdm

from latent_camo.core.exceptions import DataValidationError, NumericalError
from latent_camo.detection.model import (
    CELL_SIZE,
    DetectorSpec,
    ToyDetector,
    cell_centers,
    encode_box_targets,
)
from latent_camo.domain.scene import SceneRecord
from latent_camo.utils.config import DetectorConfig
from latent_camo.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class DetectorTrainingResult:
    """Resultado do treino de um detector."""

    model: ToyDetector
    final_loss: float
    history: List[float] = field(default_factory=list)


def positive_cells(mask: torch.Tensor, cell: int = CELL_SIZE) -> torch.Tensor:
    """
    Células cujo pixel central está dentro da máscara.

    Args:
        mask: (H, W), (1, H, W) ou (B, 1, H, W)

    Returns:
        torch.Tensor: Booleano (..., G, G)
    """
    height, width = mask.shape[-2:]
    rows, cols = cell_centers(height // cell, width // cell, cell)
    sampled = mask[..., rows[:, None], cols[None, :]]
    if mask.dim() >= 3:
        sampled = sampled.squeeze(-3)
    return sampled > 0.5


def _targets(records: Sequence[SceneRecord]):
    images = torch.stack([r.image_tensor() for r in records])
    masks = torch.stack([r.mask_tensor() for r in records])
    grid = images.shape[-1] // CELL_SIZE
    labels = positive_cells(masks).long()
    boxes = torch.stack([encode_box_targets(r.box.to_xyxy(), grid) for r in records])
    return images, labels, boxes


def detection_loss(
    logits: torch.Tensor,
    offsets: torch.Tensor,
    labels: torch.Tensor,
    box_targets: torch.Tensor,
    positive_weight: float,
    box_loss_weight: float,
) -> torch.Tensor:
    """CE ponderada por célula + smooth-L1 nas células positivas."""
    class_weights = torch.tensor([1.0, positive_weight], dtype=logits.dtype, device=logits.device)
    ce = F.cross_entropy(logits.reshape(-1, 2), labels.reshape(-1), weight=class_weights)
    positive = labels.bool()
    if positive.any():
        box = F.smooth_l1_loss(offsets[positive], box_targets[positive])
    else:
        box = offsets.sum() * 0.0
    return ce + box_loss_weight * box


def train_detector(
    records: Sequence[SceneRecord],
    variant: str,
    config: DetectorConfig,
    seed: int,
    epochs: Optional[int] = None,
    show_progress: bool = False,
) -> DetectorTrainingResult:
    """
    Treina um detector da variante indicada.

    Args:
        records: Registros com caixas e máscaras
        variant: "wide_shallow" ou "narrow_deep"
        config: Configuração dos detectores
        seed: Semente
        epochs: Sobrescreve `config.epochs`

    Raises:
        DataValidationError: Corpus vazio
        NumericalError: Perda não finita
    """
    if not records:
        raise DataValidationError("Corpus vazio: nada para treinar o detector")
    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)
    model = ToyDetector(DetectorSpec(variant=variant))
    images, labels, boxes = _targets(records)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    epochs = config.epochs if epochs is None else epochs
    history: List[float] = []

    model.train()
    for epoch in tqdm(range(epochs), desc=f"detector {variant}", disable=not show_progress):
        order = torch.randperm(len(images), generator=generator)
        total = 0.0
        for start in range(0, len(images), config.batch_size):
            idx = order[start : start + config.batch_size]
            logits, offsets = model(images[idx])
            loss = detection_loss(
                logits, offsets, labels[idx], boxes[idx], config.positive_weight, config.box_loss_weight
            )
            if not torch.isfinite(loss):
                raise NumericalError(f"Perda não finita no detector {variant} (época {epoch})")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item() * len(idx)
        history.append(total / len(images))
        logger.info(f"Detector {variant} época {epoch + 1}/{epochs}: loss={history[-1]:.4f}")

    model.eval()
    model.mark_trained()
    return DetectorTrainingResult(model=model, final_loss=history[-1] if history else float("nan"), history=history)
