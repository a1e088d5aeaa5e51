"""
Autoencoder latente convolucional (fator de redução 4, C = 4 por padrão).

`encode` devolve latentes já escalados por `latent_scale` (medido após o
treino, como o fator de escala dos modelos de difusão latente); `decode`
desfaz a escala e limita a saída a [0, 1].
"""

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import torch
import torch.nn.functional as F
from torch import nn
from tqdm import tqdm

from latent_camo.core.exceptions import DataValidationError, NotReadyError, NumericalError
from latent_camo.domain.scene import SceneRecord
from latent_camo.utils.checkpoint import load_checkpoint, restore_module, save_checkpoint
from latent_camo.utils.config import BackendConfig
from latent_camo.utils.logger import get_logger
from latent_camo.utils.validators import validate_rgb_image

logger = get_logger(__name__)


@dataclass
class AutoencoderSpec:
    """Hiperparâmetros de arquitetura (persistidos no manifesto do checkpoint)."""

    latent_channels: int = 4
    downsample_factor: int = 4
    hidden_channels: int = 32

    @classmethod
    def from_config(cls, config: BackendConfig) -> "AutoencoderSpec":
        return cls(
            latent_channels=config.latent_channels,
            downsample_factor=config.downsample_factor,
            hidden_channels=config.ae_hidden_channels,
        )


class LatentAutoencoder(nn.Module):
    """
    Encoder: convoluções com stride 2 (log2(fator) vezes) e SiLU.
    Decoder: convoluções transpostas simétricas.
    """

    def __init__(self, spec: Optional[AutoencoderSpec] = None):
        super().__init__()
        self.spec = spec or AutoencoderSpec()
        h = self.spec.hidden_channels
        levels = int(math.log2(self.spec.downsample_factor))

        enc: List[nn.Module] = [nn.Conv2d(3, h, 3, padding=1), nn.SiLU()]
        for _ in range(levels):
            enc += [nn.Conv2d(h, h, 4, stride=2, padding=1), nn.SiLU()]
        enc += [nn.Conv2d(h, self.spec.latent_channels, 3, padding=1)]
        self.encoder = nn.Sequential(*enc)

        dec: List[nn.Module] = [nn.Conv2d(self.spec.latent_channels, h, 3, padding=1), nn.SiLU()]
        for _ in range(levels):
            dec += [nn.ConvTranspose2d(h, h, 4, stride=2, padding=1), nn.SiLU()]
        dec += [nn.Conv2d(h, 3, 3, padding=1)]
        self.decoder = nn.Sequential(*dec)

        self.register_buffer("latent_scale", torch.ones(()))
        self.register_buffer("ready", torch.zeros(()))

    @property
    def factor(self) -> int:
        return self.spec.downsample_factor

    @property
    def is_ready(self) -> bool:
        return bool(self.ready.item() > 0)

    def mark_trained(self, latent_scale: float) -> None:
        """Marca o modelo como treinado e fixa a escala latente."""
        self.latent_scale.fill_(float(latent_scale))
        self.ready.fill_(1.0)

    def _require_ready(self) -> None:
        if not self.is_ready:
            raise NotReadyError("Autoencoder não treinado: treine ou carregue um checkpoint")

    def _check_input(self, x: torch.Tensor) -> None:
        validate_rgb_image(x, "x")
        h, w = x.shape[-2:]
        if h % self.factor or w % self.factor:
            raise DataValidationError(f"H e W devem ser múltiplos de {self.factor}, recebido {h}×{w}")

    # Passos crus (usados no treino, antes de existir escala)
    def encode_raw(self, x: torch.Tensor) -> torch.Tensor:
        return self.encoder(x * 2 - 1)

    def decode_raw(self, z: torch.Tensor) -> torch.Tensor:
        return (self.decoder(z) + 1) / 2

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """
        Imagem (..., 3, H, W) → latente (..., C, H/f, W/f).

        Raises:
            NotReadyError: Se o modelo não foi treinado
            DataValidationError: Se a imagem for inválida
        """
        self._require_ready()
        self._check_input(x)
        batched = x.dim() == 4
        z = self.encode_raw(x if batched else x.unsqueeze(0)) * self.latent_scale
        return z if batched else z[0]

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        """
        Latente → imagem limitada a [0, 1].

        Raises:
            NotReadyError: Se o modelo não foi treinado
        """
        self._require_ready()
        if z.dim() not in (3, 4) or z.shape[-3] != self.spec.latent_channels:
            raise DataValidationError(
                f"Latente deve ter {self.spec.latent_channels} canais, recebido {tuple(z.shape)}"
            )
        batched = z.dim() == 4
        x = self.decode_raw((z if batched else z.unsqueeze(0)) / self.latent_scale).clamp(0.0, 1.0)
        return x if batched else x[0]

    def latent_shape(self, height: int, width: int) -> tuple:
        return (self.spec.latent_channels, height // self.factor, width // self.factor)

    # ------------------------------------------------------------------
    # Persistência
    # ------------------------------------------------------------------

    def save(self, directory: Path, config_hash: str = "", metadata: Optional[dict] = None) -> Path:
        return save_checkpoint(
            directory,
            self.state_dict(),
            kind="autoencoder",
            config_hash=config_hash,
            model_config=asdict(self.spec),
            metadata=metadata,
        )

    @classmethod
    def load(cls, directory: Path) -> "LatentAutoencoder":
        """Reconstrói o autoencoder a partir de um checkpoint."""
        checkpoint = load_checkpoint(directory, expected_kind="autoencoder")
        model = cls(AutoencoderSpec(**checkpoint.model_config))
        restore_module(model, checkpoint)
        model.eval()
        return model


def freeze(module: nn.Module) -> nn.Module:
    """Desliga gradientes dos parâmetros e coloca o módulo em modo de avaliação."""
    for p in module.parameters():
        p.requires_grad_(False)
    return module.eval()


def psnr(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """PSNR em dB por imagem para valores em [0, 1]."""
    mse = ((a - b) ** 2).flatten(start_dim=1).mean(dim=1).clamp(min=1e-12)
    return 10.0 * torch.log10(1.0 / mse)


def train_autoencoder(
    records: Sequence[SceneRecord],
    config: BackendConfig,
    seed: int,
    epochs: Optional[int] = None,
    show_progress: bool = False,
) -> LatentAutoencoder:
    """
    Treina o autoencoder por reconstrução (MSE) e mede a escala latente.

    Args:
        records: Registros de treino
        config: Configuração do backend
        seed: Semente do treino
        epochs: Sobrescreve `config.ae_epochs`
        show_progress: Exibe barra de progresso (tqdm)

    Returns:
        LatentAutoencoder: Modelo pronto (`is_ready`)

    Raises:
        DataValidationError: Corpus vazio
        NumericalError: Perda não finita
    """
    if not records:
        raise DataValidationError("Corpus vazio: nada para treinar o autoencoder")
    generator = torch.Generator().manual_seed(seed)
    torch.manual_seed(seed)
    model = LatentAutoencoder(AutoencoderSpec.from_config(config))
    images = torch.stack([r.image_tensor() for r in records])
    optimizer = torch.optim.Adam(model.parameters(), lr=config.ae_learning_rate)
    epochs = config.ae_epochs if epochs is None else epochs

    model.train()
    iterator = tqdm(range(epochs), desc="autoencoder", disable=not show_progress)
    for epoch in iterator:
        order = torch.randperm(len(images), generator=generator)
        total = 0.0
        for start in range(0, len(images), config.ae_batch_size):
            batch = images[order[start : start + config.ae_batch_size]]
            loss = F.mse_loss(model.decode_raw(model.encode_raw(batch)), batch)
            if not torch.isfinite(loss):
                raise NumericalError(f"Perda não finita no autoencoder (época {epoch})")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item() * len(batch)
        logger.info(f"Autoencoder época {epoch + 1}/{epochs}: mse={total / len(images):.6f}")

    model.eval()
    with torch.no_grad():
        std = model.encode_raw(images[: min(len(images), 512)]).std().item()
    model.mark_trained(1.0 / max(std, 1e-6))
    logger.info(f"Autoencoder pronto: latent_scale={model.latent_scale.item():.4f}")
    return model
