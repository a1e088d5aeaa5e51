"""
Layout do diretório de trabalho (`--out`) compartilhado pelos subcomandos da CLI.

    corpus/                       registros e manifesto
    autoencoder/                  checkpoint
    critic/                       checkpoint
    detectors/{white_box,black_box}/  checkpoints
    denoiser_base/                execução do pré-treino
    stage1/ stage2/ onestage/     execuções dos estágios
    eval/                         detecções, relatório JSON e tabela
"""

from dataclasses import dataclass
from pathlib import Path

from latent_camo.core.exceptions import InvalidConfigurationError

# Estágio → seção da configuração e diretório da execução
STAGE_SECTIONS = {"no_box": "stage1", "white_box": "stage2", "one_stage": "onestage"}
DETECTOR_ROLES = ("white_box", "black_box")


@dataclass(frozen=True)
class WorkspaceLayout:
    """Caminhos dos artefatos de uma execução completa."""

    root: Path

    @property
    def corpus(self) -> Path:
        return Path(self.root) / "corpus"

    @property
    def autoencoder(self) -> Path:
        return Path(self.root) / "autoencoder"

    @property
    def critic(self) -> Path:
        return Path(self.root) / "critic"

    @property
    def denoiser_base(self) -> Path:
        return Path(self.root) / "denoiser_base"

    @property
    def eval(self) -> Path:
        return Path(self.root) / "eval"

    def detector(self, role: str) -> Path:
        if role not in DETECTOR_ROLES:
            raise InvalidConfigurationError(f"Papel de detector desconhecido: {role}. Opções: {DETECTOR_ROLES}")
        return Path(self.root) / "detectors" / role

    def stage_dir(self, stage: str) -> Path:
        if stage not in STAGE_SECTIONS:
            raise InvalidConfigurationError(f"Estágio desconhecido: {stage}. Opções: {tuple(STAGE_SECTIONS)}")
        return Path(self.root) / STAGE_SECTIONS[stage]
