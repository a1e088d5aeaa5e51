"""
Pré-treino do denoiser condicional base.

Objetivo padrão do backend: difusão → MSE contra ε; fluxo retificado → MSE
contra o alvo de predição configurado. O condicionamento é o da própria imagem.
Os estágios 1 e de um estágio partem deste modelo quando `init_from_base`.
"""

import json
import time
from pathlib import Path
from typing import List, Optional, Sequence

import torch
import torch.nn.functional as F
from tqdm import tqdm

from latent_camo.backend.autoencoder import LatentAutoencoder, freeze
from latent_camo.backend.conditioning import Conditioning
from latent_camo.backend.denoiser import ConditionalDenoiser, DenoiserSpec, denoise
from latent_camo.backend.schedule import NoiseSchedule, forward_noise
from latent_camo.core.exceptions import (
    CamouflageError,
    DataValidationError,
    DegenerateRegionError,
    NotReadyError,
    NumericalError,
    TrainingError,
)
from latent_camo.core.interfaces import BaseTrainer, TrainingResult
from latent_camo.core.models import LossReport
from latent_camo.domain.reference import build_conditioning
from latent_camo.domain.scene import SceneRecord
from latent_camo.optimization.base_trainer import CHECKPOINTS_DIR, CONFIG_FILE, LOSSES_FILE
from latent_camo.utils.config import BackendConfig, StrategyConfig
from latent_camo.utils.logger import attach_run_log, get_logger
from latent_camo.utils.reproducibility import seed_everything

logger = get_logger(__name__)


class DenoiserPretrainer(BaseTrainer):
    """Treina o denoiser base no corpus limpo."""

    def __init__(
        self,
        config: BackendConfig,
        strategy: StrategyConfig,
        autoencoder: LatentAutoencoder,
        schedule: NoiseSchedule,
        seed: int = 0,
        config_hash: str = "",
        iterations: Optional[int] = None,
        show_progress: bool = False,
    ):
        if not autoencoder.is_ready:
            raise NotReadyError("Autoencoder não treinado")
        self.config = config
        self.strategy = strategy
        self.autoencoder = freeze(autoencoder)
        self.schedule = schedule
        self.seed = seed
        self.config_hash = config_hash
        self.iterations = config.pretrain_iterations if iterations is None else iterations
        self.show_progress = show_progress

    def get_trainer_name(self) -> str:
        return "denoiser_base"

    def train(self, records: Sequence[SceneRecord], run_dir: Path) -> TrainingResult:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        attach_run_log(run_dir)
        try:
            return self._train(records, run_dir)
        except CamouflageError:
            raise
        except Exception as e:
            raise TrainingError(f"Falha no pré-treino do denoiser: {e}") from e

    def _train(self, records: Sequence[SceneRecord], run_dir: Path) -> TrainingResult:
        start_time = time.time()
        generator = seed_everything(self.seed)

        images: List[torch.Tensor] = []
        conditions: List[Conditioning] = []
        skipped: List[str] = []
        for record in records:
            try:
                conditions.append(build_conditioning(record, self.strategy))
            except DegenerateRegionError as e:
                logger.warning(f"Registro '{record.record_id}' descartado: {e}")
                skipped.append(record.record_id)
                continue
            images.append(record.image_tensor())
        if not images:
            raise DataValidationError("Nenhum registro utilizável para o pré-treino do denoiser")

        with torch.no_grad():
            latents = torch.cat(
                [self.autoencoder.encode(torch.stack(images[i : i + 64])) for i in range(0, len(images), 64)]
            )

        model = ConditionalDenoiser(DenoiserSpec.from_config(self.config))
        model.train()
        optimizer = torch.optim.Adam(model.parameters(), lr=self.config.pretrain_learning_rate)
        batch_size = min(self.config.pretrain_batch_size, len(images))
        (run_dir / CONFIG_FILE).write_text(
            json.dumps(
                {
                    "stage": "denoiser_base",
                    "iterations": self.iterations,
                    "seed": self.seed,
                    "mode": self.schedule.mode,
                    "config_hash": self.config_hash,
                    "skipped_records": skipped,
                },
                indent=2,
                sort_keys=True,
            ),
            encoding="utf-8",
        )

        report = None
        with (run_dir / LOSSES_FILE).open("w", encoding="utf-8") as losses_file:
            for step in tqdm(range(1, self.iterations + 1), desc="denoiser base", disable=not self.show_progress):
                idx = torch.randint(0, len(images), (batch_size,), generator=generator)
                z0 = latents[idx]
                cond = Conditioning.stack([conditions[i] for i in idx.tolist()])
                eps = torch.randn(z0.shape, generator=generator, dtype=z0.dtype)
                t = self.schedule.sample_timesteps(batch_size, generator)
                zt = forward_noise(z0, t, eps, self.schedule)
                pred = denoise(model, zt, t, cond, self.schedule)
                loss = F.mse_loss(pred, self.schedule.training_target(z0, eps))
                if not torch.isfinite(loss):
                    raise NumericalError(f"Perda não finita no pré-treino (passo {step})")
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()

                report = LossReport.from_terms(step, {"denoise": loss.item()}, {"denoise": 1.0})
                losses_file.write(report.to_json_line() + "\n")
                if step % 100 == 0 or step == 1:
                    logger.info(f"[{self.get_trainer_name()}] passo {step}/{self.iterations}: mse={loss.item():.5f}")

        model.eval()
        checkpoint_dir = model.save(
            run_dir / CHECKPOINTS_DIR / f"step_{self.iterations}",
            config_hash=self.config_hash,
            metadata={"stage": "denoiser_base", "step": self.iterations, "mode": self.schedule.mode},
        )
        execution_time = time.time() - start_time
        logger.info(f"Denoiser base pronto em {execution_time:.1f}s: {checkpoint_dir}")
        return TrainingResult(
            stage="denoiser_base",
            run_dir=run_dir,
            checkpoint_dir=checkpoint_dir,
            steps=self.iterations,
            final_report=report.to_dict() if report else None,
            skipped_records=skipped,
            execution_time=execution_time,
        )
