"""
Estágio 2 (caixa branca): continua o ajuste do estágio 1 com gradiente do detector.

    L_a = L_i + λ · L_adv + γ · L_c

O modelo treinável parte do checkpoint do estágio 1; uma cópia congelada do
mesmo checkpoint fornece x_i para a consistência de cor. Nem a cópia nem o
detector podem mudar durante o treino (verificado por hash de parâmetros).
"""

from typing import Dict, Optional

import torch

from latent_camo.backend.autoencoder import freeze
from latent_camo.backend.conditioning import Conditioning
from latent_camo.backend.denoiser import ConditionalDenoiser, denoise
from latent_camo.backend.schedule import one_step_estimate
from latent_camo.core.exceptions import NotReadyError
from latent_camo.optimization.base_trainer import StageTrainer, trainable_copy
from latent_camo.utils.checkpoint import parameter_hash
from latent_camo.utils.logger import get_logger

logger = get_logger(__name__)


class WhiteBoxTrainer(StageTrainer):
    """Ajuste adversarial contra o detector alvo a partir do estágio 1."""

    stage_name = "white_box"
    requires_detector = True

    frozen: Optional[ConditionalDenoiser] = None

    def _initial_model(self) -> ConditionalDenoiser:
        stage1 = self.artifacts.stage1_model
        if stage1 is None:
            raise NotReadyError("white_box requer o checkpoint do estágio 1")
        self.frozen = freeze(trainable_copy(stage1))
        logger.info("Modelo do estágio 1 copiado (treinável) e congelado (referência de cor)")
        return trainable_copy(stage1)

    def _frozen_output(self, zt: torch.Tensor, t: torch.Tensor, cond: Conditioning) -> torch.Tensor:
        schedule = self.artifacts.schedule
        with torch.no_grad():
            pred = denoise(self.frozen, zt.detach(), t, cond, schedule)
            return self.artifacts.autoencoder.decode(one_step_estimate(zt.detach(), t, pred, schedule))

    def _integrity_hashes(self) -> Dict[str, str]:
        return {
            "frozen_stage1": parameter_hash(self.frozen),
            "detector": parameter_hash(self.artifacts.detector),
        }
