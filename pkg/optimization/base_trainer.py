"""
Classe base dos treinadores de estágio do denoiser condicional.

Cada passo de treino:
    registro(s) → condicionamento → t, ε → z_t → denoiser → ẑ₀ (um passo)
    → x̂₀ = D(ẑ₀) → perdas → passo do otimizador (apenas no denoiser)

O diretório da execução recebe `config.json`, `losses.jsonl` (um LossReport
por passo), `checkpoints/step_{n}/`, `probe/step_{n}.json` e `run.log`.
"""

import json
import time
from abc import abstractmethod
from copy import deepcopy
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import torch
from tqdm import tqdm

from latent_camo.backend.autoencoder import LatentAutoencoder, freeze
from latent_camo.backend.conditioning import Conditioning
from latent_camo.backend.denoiser import ConditionalDenoiser, DenoiserSpec, denoise
from latent_camo.backend.schedule import NoiseSchedule, forward_noise, one_step_estimate
from latent_camo.core.exceptions import (
    CamouflageError,
    DataValidationError,
    DegenerateRegionError,
    InvalidConfigurationError,
    NotReadyError,
    NumericalError,
    TrainingError,
)
from latent_camo.core.interfaces import BaseTrainer, TrainingResult
from latent_camo.core.models import LossReport
from latent_camo.critic.model import LatentCritic, stage_masks
from latent_camo.critic.training import latent_mask
from latent_camo.detection.model import VEHICLE_CLASS, ToyDetector, require_ready
from latent_camo.detection.training import positive_cells
from latent_camo.domain.reference import build_conditioning, select_reference
from latent_camo.domain.scene import SceneRecord
from latent_camo.imaging.maskops import composite
from latent_camo.optimization.losses import CompositeLoss, LossInputs
from latent_camo.utils.config import CriticConfig, StageConfig
from latent_camo.utils.logger import attach_run_log, get_logger
from latent_camo.utils.reproducibility import seed_everything

logger = get_logger(__name__)

CHECKPOINTS_DIR = "checkpoints"
PROBE_DIR = "probe"
LOSSES_FILE = "losses.jsonl"
CONFIG_FILE = "config.json"


@dataclass
class StageArtifacts:
    """Modelos pré-requisito de um estágio (todos congelados exceto o denoiser treinado)."""

    autoencoder: LatentAutoencoder
    critic: LatentCritic
    schedule: NoiseSchedule
    detector: Optional[ToyDetector] = None
    stage1_model: Optional[ConditionalDenoiser] = None
    base_model: Optional[ConditionalDenoiser] = None
    provenance: Dict[str, str] = field(default_factory=dict)


@dataclass
class PreparedRecord:
    """Tensores de um registro já validado para o estágio."""

    record_id: str
    image: torch.Tensor  # (3, H, W)
    mask: torch.Tensor  # (1, H, W)
    x_s: torch.Tensor  # (3, H, W)
    m_s: torch.Tensor  # (1, H, W)
    conditioning: Conditioning


@dataclass
class TrainingBatch:
    """Lote empilhado a partir de PreparedRecords."""

    x0: torch.Tensor
    mask: torch.Tensor
    x_s: torch.Tensor
    m_s: torch.Tensor
    conditioning: Conditioning

    @classmethod
    def stack(cls, items: Sequence[PreparedRecord]) -> "TrainingBatch":
        return cls(
            x0=torch.stack([p.image for p in items]),
            mask=torch.stack([p.mask for p in items]),
            x_s=torch.stack([p.x_s for p in items]),
            m_s=torch.stack([p.m_s for p in items]),
            conditioning=Conditioning.stack([p.conditioning for p in items]),
        )


def checkpoint_steps(run_dir: Path) -> List[int]:
    """Passos com checkpoint salvo em `run_dir/checkpoints/`, em ordem crescente."""
    directory = Path(run_dir) / CHECKPOINTS_DIR
    if not directory.exists():
        return []
    steps = []
    for child in directory.iterdir():
        if child.is_dir() and child.name.startswith("step_") and (child / "manifest.json").exists():
            steps.append(int(child.name[len("step_"):]))
    return sorted(steps)


def latest_checkpoint(run_dir: Path) -> Path:
    """
    Checkpoint do maior passo de uma execução.

    Raises:
        NotReadyError: Se a execução não tiver checkpoints
    """
    steps = checkpoint_steps(run_dir)
    if not steps:
        raise NotReadyError(f"Nenhum checkpoint em {Path(run_dir) / CHECKPOINTS_DIR}")
    return Path(run_dir) / CHECKPOINTS_DIR / f"step_{steps[-1]}"


def trainable_copy(model: ConditionalDenoiser) -> ConditionalDenoiser:
    """Cópia independente com gradientes ligados."""
    copy = deepcopy(model)
    for p in copy.parameters():
        p.requires_grad_(True)
    return copy.train()


class StageTrainer(BaseTrainer):
    """
    Laço de treino comum aos estágios (sem caixa, caixa branca, um estágio).

    Subclasses definem o modelo inicial e, quando aplicável, a saída do modelo
    congelado usada pela consistência de cor.
    """

    stage_name: str = ""
    requires_detector: bool = False

    def __init__(
        self,
        config: StageConfig,
        artifacts: StageArtifacts,
        critic_config: Optional[CriticConfig] = None,
        denoiser_spec: Optional[DenoiserSpec] = None,
        config_hash: str = "",
        show_progress: bool = False,
    ):
        """
        Args:
            config: Configuração do estágio (strategy e backend_mode já resolvidos)
            artifacts: Autoencoder, crítico, agenda e modelos auxiliares
            critic_config: Estágios e modo de máscara da perda de estilo
            denoiser_spec: Arquitetura do denoiser quando treinado do zero
            config_hash: Hash da configuração da execução (manifesto dos checkpoints)
            show_progress: Exibe barra de progresso (tqdm)

        Raises:
            InvalidConfigurationError: Estágio incompatível com o treinador
            NotReadyError: Artefato pré-requisito ausente ou não treinado
        """
        if config.stage != self.stage_name:
            raise InvalidConfigurationError(
                f"{type(self).__name__} treina '{self.stage_name}', recebido '{config.stage}'"
            )
        if config.strategy is None:
            raise InvalidConfigurationError("StageConfig.strategy não resolvida (use RunConfig)")
        if config.backend_mode is not None and config.backend_mode != artifacts.schedule.mode:
            raise InvalidConfigurationError(
                f"backend_mode '{config.backend_mode}' difere da agenda '{artifacts.schedule.mode}'"
            )
        if not artifacts.autoencoder.is_ready:
            raise NotReadyError("Autoencoder não treinado")
        if not artifacts.critic.is_ready:
            raise NotReadyError("Crítico não treinado")
        if self.requires_detector:
            if artifacts.detector is None:
                raise NotReadyError(f"O estágio {self.stage_name} requer um detector treinado")
            require_ready(artifacts.detector)

        self.config = config
        self.artifacts = artifacts
        self.critic_config = critic_config or CriticConfig()
        self.denoiser_spec = denoiser_spec or DenoiserSpec(
            latent_channels=artifacts.autoencoder.spec.latent_channels
        )
        self.config_hash = config_hash
        self.show_progress = show_progress
        self.weights = config.effective_weights()

        for module in (artifacts.autoencoder, artifacts.critic, artifacts.detector):
            if module is not None:
                freeze(module)

        self.loss = CompositeLoss(
            stage=config.stage,
            weights=self.weights,
            critic=artifacts.critic,
            encoder=artifacts.autoencoder,
            detector=artifacts.detector,
            toggles=config.loss_toggles,
            style_stages=self.critic_config.style_stages,
            mask_mode=self.critic_config.stage_mask_mode,
            selection_threshold=self.critic_config.selection_threshold,
        )
        self.model: Optional[ConditionalDenoiser] = None

    def get_trainer_name(self) -> str:
        return self.stage_name

    # ------------------------------------------------------------------
    # Ganchos das subclasses
    # ------------------------------------------------------------------

    @abstractmethod
    def _initial_model(self) -> ConditionalDenoiser:
        """Modelo treinável no início do estágio."""
        pass

    def _base_or_fresh_model(self) -> ConditionalDenoiser:
        """Cópia do denoiser base pré-treinado (quando configurado) ou um modelo novo."""
        base = self.artifacts.base_model
        if self.config.init_from_base and base is not None:
            logger.info("Inicializando a partir do denoiser base pré-treinado")
            return trainable_copy(base)
        logger.info("Inicializando o denoiser do zero")
        torch.manual_seed(self.config.seed)
        return ConditionalDenoiser(self.denoiser_spec)

    def _frozen_output(
        self, zt: torch.Tensor, t: torch.Tensor, cond: Conditioning
    ) -> Optional[torch.Tensor]:
        """Decodificação da estimativa de um passo do modelo congelado (quando existe)."""
        return None

    def _integrity_hashes(self) -> Dict[str, str]:
        """Hashes de parâmetros que não podem mudar durante o treino."""
        return {}

    # ------------------------------------------------------------------
    # Preparação
    # ------------------------------------------------------------------

    def prepare_records(self, records: Sequence[SceneRecord]) -> Tuple[List[PreparedRecord], List[str]]:
        """
        Constrói referência e condicionamento por registro, descartando registros
        cujas regiões degeneram na resolução latente ou em algum estágio do crítico.

        Returns:
            (registros preparados, ids descartados)
        """
        prepared: List[PreparedRecord] = []
        skipped: List[str] = []
        for record in records:
            try:
                x_s, m_s = select_reference(record, self.config.strategy)
                mask = record.mask_tensor()
                self._check_regions(mask, m_s)
                cond = build_conditioning(record, self.config.strategy)
            except DegenerateRegionError as e:
                logger.warning(f"Registro '{record.record_id}' descartado: {e}")
                skipped.append(record.record_id)
                continue
            prepared.append(PreparedRecord(record.record_id, record.image_tensor(), mask, x_s, m_s, cond))
        return prepared, skipped

    def _check_regions(self, mask: torch.Tensor, m_s: torch.Tensor) -> None:
        factor = self.artifacts.autoencoder.factor
        threshold = self.critic_config.selection_threshold
        style_active = self.loss.is_active("style")
        vehicle_latent = latent_mask(mask.unsqueeze(0), factor, threshold)
        regions = {"máscara do veículo": vehicle_latent}
        if style_active:
            regions["máscara de referência"] = latent_mask(m_s.unsqueeze(0), factor, threshold)
        for name, region in regions.items():
            levels = [region]
            if style_active:
                levels = stage_masks(region, self.artifacts.critic, self.critic_config.stage_mask_mode)
            for level, level_mask in enumerate(levels):
                if not (level_mask > 0).any():
                    raise DegenerateRegionError(f"{name} desaparece no nível {level} do crítico")
        if self.loss.is_active("background") and not (vehicle_latent < 1).any():
            raise DegenerateRegionError("complemento da máscara vazio na resolução latente")
        if self.loss.is_active("adversarial") and not positive_cells(mask).any():
            raise DegenerateRegionError("nenhuma célula do detector dentro da máscara do veículo")

    # ------------------------------------------------------------------
    # Passo
    # ------------------------------------------------------------------

    def _one_step(
        self,
        model: ConditionalDenoiser,
        batch: TrainingBatch,
        generator: torch.Generator,
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Retorna (x̂₀, z_t, t) para um lote com t e ε sorteados."""
        schedule = self.artifacts.schedule
        with torch.no_grad():
            z0 = self.artifacts.autoencoder.encode(batch.x0)
        eps = torch.randn(z0.shape, generator=generator, dtype=z0.dtype)
        t = schedule.sample_timesteps(z0.shape[0], generator)
        zt = forward_noise(z0, t, eps, schedule)
        pred = denoise(model, zt, t, batch.conditioning, schedule)
        z0_hat = one_step_estimate(zt, t, pred, schedule)
        return self.artifacts.autoencoder.decode(z0_hat), zt, t

    def _loss_inputs(
        self, batch: TrainingBatch, x_hat: torch.Tensor, zt: torch.Tensor, t: torch.Tensor
    ) -> LossInputs:
        x_stage1 = None
        if self.loss.is_active("color"):
            x_stage1 = self._frozen_output(zt, t, batch.conditioning)
        return LossInputs(
            x0=batch.x0, x_hat=x_hat, mask=batch.mask, x_s=batch.x_s, m_s=batch.m_s, x_stage1=x_stage1
        )

    # ------------------------------------------------------------------
    # Laço
    # ------------------------------------------------------------------

    def train(self, records: Sequence[SceneRecord], run_dir: Path) -> TrainingResult:
        """
        Treina o denoiser do estágio e grava o diretório da execução.

        Raises:
            DataValidationError: Nenhum registro utilizável
            NumericalError: Perda não finita (com o detalhamento dos termos)
            TrainingError: Falha inesperada ou alteração de modelo congelado
        """
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        attach_run_log(run_dir)
        try:
            return self._train(records, run_dir)
        except CamouflageError:
            raise
        except Exception as e:
            raise TrainingError(f"Falha no treino do estágio {self.stage_name}: {e}") from e

    def _train(self, records: Sequence[SceneRecord], run_dir: Path) -> TrainingResult:
        cfg = self.config
        start_time = time.time()
        generator = seed_everything(cfg.seed)

        prepared, skipped = self.prepare_records(records)
        if not prepared:
            raise DataValidationError(f"Nenhum registro utilizável para o estágio {self.stage_name}")
        if skipped:
            logger.warning(f"{len(skipped)} registro(s) descartado(s) por região degenerada")

        self._write_config(run_dir, len(prepared), skipped)
        model = self._initial_model()
        model.train()
        self.model = model
        hashes_before = self._integrity_hashes()

        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
        probe = TrainingBatch.stack(prepared[: max(1, min(cfg.probe_size, len(prepared)))])
        batch_size = min(cfg.batch_size, len(prepared))
        last_report: Optional[LossReport] = None
        checkpoint_dir = run_dir

        logger.info(
            f"Iniciando {self.get_trainer_name()}: {cfg.iterations} iterações, lote {batch_size}, "
            f"{len(prepared)} registros, pesos {self.weights.as_term_weights()}"
        )
        with (run_dir / LOSSES_FILE).open("w", encoding="utf-8") as losses_file:
            for step in tqdm(range(1, cfg.iterations + 1), desc=self.stage_name, disable=not self.show_progress):
                indices = torch.randint(0, len(prepared), (batch_size,), generator=generator)
                batch = TrainingBatch.stack([prepared[i] for i in indices.tolist()])

                x_hat, zt, t = self._one_step(model, batch, generator)
                terms = self.loss.compute_terms(self._loss_inputs(batch, x_hat, zt, t))
                total = self.loss.calculate(terms)
                if not torch.isfinite(total):
                    breakdown = self.loss.get_components_breakdown(terms)
                    raise NumericalError(f"Perda não finita no passo {step} ({self.stage_name}): {breakdown}")

                optimizer.zero_grad()
                total.backward()
                optimizer.step()

                last_report = self.loss.report(step, terms)
                losses_file.write(last_report.to_json_line() + "\n")

                if step % cfg.log_every == 0 or step == 1:
                    parts = ", ".join(f"{k}={v:.5f}" for k, v in last_report.terms.items())
                    logger.info(
                        f"[{self.stage_name}] passo {step}/{cfg.iterations}: total={last_report.total:.5f} ({parts})"
                    )

                if step % cfg.checkpoint_every == 0 or step == cfg.iterations:
                    losses_file.flush()
                    checkpoint_dir = self._save_step(run_dir, step, model, probe)

        hashes_after = self._integrity_hashes()
        changed = [name for name, value in hashes_before.items() if hashes_after.get(name) != value]
        if changed:
            raise TrainingError(f"Modelos congelados alterados durante o treino: {changed}")

        model.eval()
        execution_time = time.time() - start_time
        logger.info(
            f"{self.get_trainer_name()} concluído em {execution_time:.1f}s; checkpoint final: {checkpoint_dir}"
        )
        return TrainingResult(
            stage=self.stage_name,
            run_dir=run_dir,
            checkpoint_dir=checkpoint_dir,
            steps=cfg.iterations,
            final_report=last_report.to_dict() if last_report else None,
            skipped_records=skipped,
            execution_time=execution_time,
            metadata={"integrity_hashes": hashes_after, "records": len(prepared)},
        )

    def _write_config(self, run_dir: Path, n_records: int, skipped: List[str]) -> None:
        payload = {
            "stage_config": asdict(self.config),
            "effective_weights": self.weights.as_term_weights(),
            "config_hash": self.config_hash,
            "provenance": dict(self.artifacts.provenance),
            "records": n_records,
            "skipped_records": skipped,
        }
        (run_dir / CONFIG_FILE).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")

    def _save_step(self, run_dir: Path, step: int, model: ConditionalDenoiser, probe: TrainingBatch) -> Path:
        directory = run_dir / CHECKPOINTS_DIR / f"step_{step}"
        model.save(
            directory,
            config_hash=self.config_hash,
            metadata={"stage": self.stage_name, "step": step, "mode": self.artifacts.schedule.mode},
        )
        metrics = self.probe_metrics(model, probe)
        probe_dir = run_dir / PROBE_DIR
        probe_dir.mkdir(parents=True, exist_ok=True)
        (probe_dir / f"step_{step}.json").write_text(
            json.dumps({"step": step, **metrics}, indent=2, sort_keys=True), encoding="utf-8"
        )
        logger.info(f"Checkpoint do passo {step} salvo; sonda: {metrics}")
        return directory

    # ------------------------------------------------------------------
    # Sonda
    # ------------------------------------------------------------------

    def probe_estimate(self, model: ConditionalDenoiser, probe: TrainingBatch) -> torch.Tensor:
        """x̂₀ de um passo no lote de sonda, com t no meio da agenda e ruído fixo."""
        schedule = self.artifacts.schedule
        generator = torch.Generator().manual_seed(0)
        with torch.no_grad():
            z0 = self.artifacts.autoencoder.encode(probe.x0)
            eps = torch.randn(z0.shape, generator=generator, dtype=z0.dtype)
            if schedule.mode == "diffusion":
                t = torch.full((z0.shape[0],), schedule.num_timesteps // 2, dtype=torch.long)
            else:
                t = torch.full((z0.shape[0],), 0.5, dtype=torch.float64)
            zt = forward_noise(z0, t, eps, schedule)
            pred = denoise(model, zt, t, probe.conditioning, schedule)
            return self.artifacts.autoencoder.decode(one_step_estimate(zt, t, pred, schedule))

    def probe_metrics(self, model: ConditionalDenoiser, probe: TrainingBatch) -> Dict[str, Optional[float]]:
        """Médias de L_struct, L_s e confiança de veículo do detector no lote de sonda."""
        was_training = model.training
        model.eval()
        x_hat = self.probe_estimate(model, probe)
        with torch.no_grad():
            metrics: Dict[str, Optional[float]] = {
                "struct": float(self.loss.struct_loss.calculate(probe.x0, x_hat, probe.mask)),
            }
            try:
                metrics["style"] = float(self.loss.style_loss.calculate(x_hat, probe.mask, probe.x_s, probe.m_s))
            except DegenerateRegionError:
                metrics["style"] = None
            detector = self.artifacts.detector
            if detector is not None:
                x_comp = composite(x_hat, probe.x0, probe.mask)
                logits, _ = detector(x_comp)
                vehicle = logits.softmax(dim=-1)[..., VEHICLE_CLASS]
                metrics["detector_confidence"] = float(vehicle.flatten(start_dim=1).max(dim=1).values.mean())
        model.train(was_training)
        return metrics
