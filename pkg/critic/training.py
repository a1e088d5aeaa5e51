"""
Treino do crítico latente sobre latentes de fundo mascarados, com cutout
diferenciável como aumento de dados.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F
from tqdm import tqdm

from latent_camo.backend.autoencoder import LatentAutoencoder
from latent_camo.core.exceptions import DataValidationError, NumericalError
from latent_camo.critic.model import CriticSpec, LatentCritic
from latent_camo.domain.scene import SceneRecord
from latent_camo.imaging.maskops import binarize, downsample_mask
from latent_camo.utils.config import CriticConfig
from latent_camo.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class CriticTrainingResult:
    """Resultado do treino do crítico."""

    model: LatentCritic
    train_accuracy: float
    final_loss: float
    labels: Tuple[str, ...]
    history: List[float] = field(default_factory=list)


def cutout(z: torch.Tensor, generator: torch.Generator, fraction: float = 0.5) -> torch.Tensor:
    """
    Zera um retângulo aleatório por exemplo: z · (1 − R).

    O lado do retângulo é `fraction` do lado do latente; fora de R o gradiente
    passa inalterado.
    """
    batch, _, h, w = z.shape
    ch, cw = max(1, int(round(h * fraction))), max(1, int(round(w * fraction)))
    tops = torch.randint(0, h - ch + 1, (batch,), generator=generator)
    lefts = torch.randint(0, w - cw + 1, (batch,), generator=generator)
    rows = torch.arange(h)[None, :, None]
    cols = torch.arange(w)[None, None, :]
    inside = (
        (rows >= tops[:, None, None])
        & (rows < (tops + ch)[:, None, None])
        & (cols >= lefts[:, None, None])
        & (cols < (lefts + cw)[:, None, None])
    )
    keep = (~inside).to(z.dtype).unsqueeze(1).to(z.device)
    return z * keep


def latent_mask(mask: torch.Tensor, factor: int, threshold: float = 0.5) -> torch.Tensor:
    """Máscara binária na resolução latente: binarize(downsample_mask(m, f), limiar)."""
    return binarize(downsample_mask(mask, factor), threshold)


def background_latents(
    autoencoder: LatentAutoencoder,
    images: torch.Tensor,
    masks: torch.Tensor,
    threshold: float = 0.5,
) -> torch.Tensor:
    """E(x ⊙ (1 − m)) ⊙ (1 − m↓) para um lote (B, 3, H, W) / (B, 1, H, W)."""
    complement = 1.0 - latent_mask(masks, autoencoder.factor, threshold)
    return autoencoder.encode(images * (1.0 - masks)) * complement


def _encode_records(
    autoencoder: LatentAutoencoder,
    records: Sequence[SceneRecord],
    threshold: float = 0.5,
    batch_size: int = 64,
) -> torch.Tensor:
    chunks = []
    with torch.no_grad():
        for start in range(0, len(records), batch_size):
            part = records[start : start + batch_size]
            images = torch.stack([r.image_tensor() for r in part])
            masks = torch.stack([r.mask_tensor() for r in part])
            chunks.append(background_latents(autoencoder, images, masks, threshold))
    return torch.cat(chunks)


def _labels(records: Sequence[SceneRecord], labels: Sequence[str]) -> torch.Tensor:
    index = {label: i for i, label in enumerate(labels)}
    unknown = sorted({r.scene_label for r in records} - set(index))
    if unknown:
        raise DataValidationError(f"Registros com cenas fora dos rótulos do crítico: {unknown}")
    return torch.tensor([index[r.scene_label] for r in records])


def critic_accuracy(
    model: LatentCritic,
    autoencoder: LatentAutoencoder,
    records: Sequence[SceneRecord],
    labels: Sequence[str],
    selection_threshold: float = 0.5,
) -> float:
    """Acurácia de classificação de cena em um conjunto de registros."""
    if not records:
        raise DataValidationError("Conjunto vazio para medir acurácia do crítico")
    latents = _encode_records(autoencoder, records, selection_threshold)
    targets = _labels(records, labels)
    with torch.no_grad():
        predictions = model.classify(latents).argmax(dim=1)
    return float((predictions == targets).float().mean().item())


def train_critic(
    records: Sequence[SceneRecord],
    autoencoder: LatentAutoencoder,
    config: CriticConfig,
    labels: Sequence[str],
    seed: int,
    epochs: Optional[int] = None,
    show_progress: bool = False,
) -> CriticTrainingResult:
    """
    Treina o crítico para classificar a cena a partir do latente de fundo.

    Args:
        records: Registros de treino
        autoencoder: Autoencoder treinado
        config: Configuração do crítico
        labels: Rótulos de classe (K >= 2), na ordem dos índices
        seed: Semente do treino
        epochs: Sobrescreve `config.epochs`

    Returns:
        CriticTrainingResult: Modelo pronto e acurácia final de treino

    Raises:
        DataValidationError: K < 2 ou corpus vazio
        NotReadyError: Autoencoder não treinado
    """
    labels = tuple(labels)
    if len(labels) < 2:
        raise DataValidationError(f"O crítico requer ao menos 2 classes, recebido {len(labels)}")
    if not records:
        raise DataValidationError("Corpus vazio: nada para treinar o crítico")

    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)
    latents = _encode_records(autoencoder, records, config.selection_threshold)
    targets = _labels(records, labels)

    model = LatentCritic(CriticSpec.from_config(config, autoencoder.spec.latent_channels, len(labels)))
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    epochs = config.epochs if epochs is None else epochs
    history: List[float] = []

    model.train()
    for epoch in tqdm(range(epochs), desc="crítico", disable=not show_progress):
        order = torch.randperm(len(latents), generator=generator)
        total = 0.0
        for start in range(0, len(latents), config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = cutout(latents[idx], generator, config.cutout_fraction)
            loss = F.cross_entropy(model.classify(batch), targets[idx])
            if not torch.isfinite(loss):
                raise NumericalError(f"Perda não finita no crítico (época {epoch})")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item() * len(idx)
        history.append(total / len(latents))
        logger.info(f"Crítico época {epoch + 1}/{epochs}: ce={history[-1]:.4f}")

    model.eval()
    model.mark_trained()
    with torch.no_grad():
        accuracy = float((model.classify(latents).argmax(dim=1) == targets).float().mean().item())
    logger.info(f"Crítico pronto: acurácia de treino={accuracy:.3f}")
    return CriticTrainingResult(
        model=model,
        train_accuracy=accuracy,
        final_loss=history[-1] if history else float("nan"),
        labels=labels,
        history=history,
    )
