"""
Factory para criar instâncias de treinadores de estágio.

Permite criar o treinador de cada estágio a partir da configuração da execução,
seguindo o padrão Factory, e carrega do diretório de trabalho os artefatos
pré-requisito de cada um.
"""

from pathlib import Path
from typing import Dict, Optional, Type

from latent_camo.backend.autoencoder import LatentAutoencoder
from latent_camo.backend.denoiser import ConditionalDenoiser, DenoiserSpec
from latent_camo.backend.schedule import NoiseSchedule
from latent_camo.core.exceptions import InvalidConfigurationError, NotReadyError
from latent_camo.critic.model import LatentCritic
from latent_camo.detection.model import ToyDetector
from latent_camo.optimization.base_trainer import StageArtifacts, StageTrainer, latest_checkpoint
from latent_camo.optimization.no_box_trainer import NoBoxTrainer
from latent_camo.optimization.one_stage_trainer import OneStageTrainer
from latent_camo.optimization.white_box_trainer import WhiteBoxTrainer
from latent_camo.utils.checkpoint import checkpoint_hash
from latent_camo.utils.config import RunConfig, StageConfig
from latent_camo.utils.logger import get_logger
from latent_camo.utils.workspace import STAGE_SECTIONS, WorkspaceLayout

logger = get_logger(__name__)

TRAINERS: Dict[str, Type[StageTrainer]] = {
    "no_box": NoBoxTrainer,
    "white_box": WhiteBoxTrainer,
    "one_stage": OneStageTrainer,
}


def stage_config(run_config: RunConfig, stage: str) -> StageConfig:
    """Seção da configuração correspondente ao estágio."""
    if stage not in STAGE_SECTIONS:
        raise InvalidConfigurationError(
            f"Estágio não suportado: {stage}. Opções: {', '.join(STAGE_SECTIONS)}"
        )
    return getattr(run_config, STAGE_SECTIONS[stage])


def load_stage_artifacts(layout: WorkspaceLayout, run_config: RunConfig, stage: str) -> StageArtifacts:
    """
    Carrega autoencoder, crítico e os modelos auxiliares exigidos pelo estágio.

    Checkpoints explícitos na configuração têm precedência sobre o layout do
    diretório de trabalho.

    Raises:
        NotReadyError: Checkpoint exigido ausente
    """
    cfg = stage_config(run_config, stage)
    provenance: Dict[str, str] = {}

    def tracked(name: str, directory: Path) -> Path:
        provenance[name] = checkpoint_hash(directory)
        return directory

    autoencoder = LatentAutoencoder.load(tracked("autoencoder", layout.autoencoder))
    critic = LatentCritic.load(tracked("critic", layout.critic))

    detector: Optional[ToyDetector] = None
    detector_dir = Path(cfg.detector_checkpoint) if cfg.detector_checkpoint else layout.detector("white_box")
    if stage in ("white_box", "one_stage"):
        detector = ToyDetector.load(tracked("detector", detector_dir))
    elif (detector_dir / "manifest.json").exists():
        # Só para a sonda do estágio 1
        detector = ToyDetector.load(tracked("detector", detector_dir))

    stage1_model = None
    if stage == "white_box":
        if cfg.stage1_checkpoint:
            stage1_dir = Path(cfg.stage1_checkpoint)
        else:
            stage1_dir = latest_checkpoint(layout.stage_dir("no_box"))
        stage1_model = ConditionalDenoiser.load(tracked("stage1", stage1_dir))

    base_model = None
    if stage != "white_box" and cfg.init_from_base:
        if cfg.base_checkpoint:
            base_model = ConditionalDenoiser.load(tracked("denoiser_base", Path(cfg.base_checkpoint)))
        else:
            try:
                base_dir = latest_checkpoint(layout.denoiser_base)
            except NotReadyError:
                logger.warning("Denoiser base ausente: o estágio será treinado do zero")
            else:
                base_model = ConditionalDenoiser.load(tracked("denoiser_base", base_dir))

    return StageArtifacts(
        autoencoder=autoencoder,
        critic=critic,
        schedule=NoiseSchedule.from_config(run_config.backend),
        detector=detector,
        stage1_model=stage1_model,
        base_model=base_model,
        provenance=provenance,
    )


class TrainerFactory:
    """
    Factory para criar treinadores de estágio.

    Exemplo:
        factory = TrainerFactory()
        trainer = factory.create("no_box", run_config, artifacts)
    """

    @staticmethod
    def create(
        stage: str,
        run_config: RunConfig,
        artifacts: StageArtifacts,
        show_progress: bool = False,
    ) -> StageTrainer:
        """
        Cria uma instância de treinador.

        Args:
            stage: "no_box", "white_box" ou "one_stage"
            run_config: Configuração da execução
            artifacts: Modelos pré-requisito (ver `load_stage_artifacts`)
            show_progress: Exibe barra de progresso

        Returns:
            StageTrainer: Treinador do estágio

        Raises:
            InvalidConfigurationError: Se o estágio não for suportado
        """
        cfg = stage_config(run_config, stage)
        return TRAINERS[stage](
            config=cfg,
            artifacts=artifacts,
            critic_config=run_config.critic,
            denoiser_spec=DenoiserSpec.from_config(run_config.backend),
            config_hash=run_config.config_hash(),
            show_progress=show_progress,
        )
