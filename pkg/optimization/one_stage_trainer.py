"""
Variante de um estágio (ablação): todos os termos de L_a desde o início,
exceto a consistência de cor, que não tem modelo congelado de referência.
"""

from typing import Dict

from latent_camo.backend.denoiser import ConditionalDenoiser
from latent_camo.optimization.base_trainer import StageTrainer
from latent_camo.utils.checkpoint import parameter_hash


class OneStageTrainer(StageTrainer):
    """Treino conjunto com perda adversarial a partir do modelo base."""

    stage_name = "one_stage"
    requires_detector = True

    def _initial_model(self) -> ConditionalDenoiser:
        return self._base_or_fresh_model()

    def _integrity_hashes(self) -> Dict[str, str]:
        return {"detector": parameter_hash(self.artifacts.detector)}
