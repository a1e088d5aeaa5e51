"""
Inferência por amostragem completa e composição com o fundo real.
"""

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import torch

from latent_camo.backend.autoencoder import LatentAutoencoder
from latent_camo.backend.denoiser import ConditionalDenoiser
from latent_camo.backend.sampler import sample
from latent_camo.backend.schedule import NoiseSchedule
from latent_camo.core.exceptions import NotReadyError
from latent_camo.domain.reference import build_conditioning
from latent_camo.domain.scene import SceneRecord
from latent_camo.imaging.maskops import composite
from latent_camo.utils.config import BackendConfig, StrategyConfig
from latent_camo.utils.reproducibility import derive_seed


def default_steps(mode: str) -> int:
    """Passos padrão de amostragem: 30 (difusão) e 28 (fluxo retificado)."""
    return BackendConfig(mode=mode).default_sampling_steps


def infer(
    denoiser: ConditionalDenoiser,
    record: SceneRecord,
    strategy: StrategyConfig,
    autoencoder: LatentAutoencoder,
    schedule: NoiseSchedule,
    steps: Optional[int] = None,
    seed: int = 0,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Gera a imagem camuflada de um registro e a compõe com o fundo original.

    Args:
        denoiser: Denoiser treinado (qualquer estágio)
        record: Registro da cena
        strategy: Estratégia de referência usada no treino
        autoencoder: Autoencoder treinado
        schedule: Agenda do modo do checkpoint
        steps: Passos de amostragem (None = padrão do modo)
        seed: Semente do ruído inicial

    Returns:
        (camuflada (3, H, W), composta (3, H, W)); a composta é idêntica à
        imagem original fora da máscara do veículo
    """
    steps = default_steps(schedule.mode) if steps is None else steps
    cond = build_conditioning(record, strategy)
    camouflaged = sample(denoiser, cond, steps, seed, autoencoder, schedule)
    composited = composite(camouflaged, record.image_tensor(camouflaged.dtype), record.mask_tensor(camouflaged.dtype))
    return camouflaged, composited


@dataclass
class InferenceResult:
    """Saída da geração de um registro."""

    record_id: str
    camouflaged: torch.Tensor
    composited: torch.Tensor
    latency_s: float


class CamouflageGenerator:
    """
    Agrupa os modelos de um checkpoint treinado para gerar camuflagens em série.

    A semente de cada registro é derivada de (semente base, id do registro).
    """

    def __init__(
        self,
        denoiser: ConditionalDenoiser,
        autoencoder: LatentAutoencoder,
        schedule: NoiseSchedule,
        strategy: StrategyConfig,
        steps: Optional[int] = None,
        seed: int = 0,
    ):
        if not autoencoder.is_ready:
            raise NotReadyError("Autoencoder não treinado")
        self.denoiser = denoiser.eval()
        self.autoencoder = autoencoder.eval()
        self.schedule = schedule
        self.strategy = strategy
        self.steps = default_steps(schedule.mode) if steps is None else steps
        self.seed = seed

    @classmethod
    def from_checkpoints(
        cls,
        denoiser_dir: Path,
        autoencoder_dir: Path,
        backend: BackendConfig,
        strategy: StrategyConfig,
        steps: Optional[int] = None,
        seed: int = 0,
    ) -> "CamouflageGenerator":
        """Carrega denoiser e autoencoder de diretórios de checkpoint."""
        return cls(
            ConditionalDenoiser.load(denoiser_dir),
            LatentAutoencoder.load(autoencoder_dir),
            NoiseSchedule.from_config(backend),
            strategy,
            steps=backend.default_sampling_steps if steps is None else steps,
            seed=seed,
        )

    def record_seed(self, record: SceneRecord) -> int:
        return derive_seed(self.seed, record.record_id)

    def generate(self, record: SceneRecord) -> InferenceResult:
        """Amostra e compõe um registro, medindo a latência de parede."""
        start = time.perf_counter()
        camouflaged, composited = infer(
            self.denoiser,
            record,
            self.strategy,
            self.autoencoder,
            self.schedule,
            steps=self.steps,
            seed=self.record_seed(record),
        )
        return InferenceResult(record.record_id, camouflaged, composited, time.perf_counter() - start)
