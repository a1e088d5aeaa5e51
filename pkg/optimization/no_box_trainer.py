"""
Estágio 1 (sem caixa): estilização e preservação de estrutura sem detector.

    L_i = s · L_struct + α · L_s + β · L_b
"""

from latent_camo.backend.denoiser import ConditionalDenoiser
from latent_camo.optimization.base_trainer import StageTrainer


class NoBoxTrainer(StageTrainer):
    """
    Ajusta o denoiser condicional apenas com os termos do estágio 1.

    Um detector em `artifacts.detector`, se fornecido, é usado somente na sonda.
    """

    stage_name = "no_box"

    def _initial_model(self) -> ConditionalDenoiser:
        return self._base_or_fresh_model()
