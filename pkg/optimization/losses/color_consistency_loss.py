"""
Componente de perda: consistência de cor entre estágios.

Distância nos canais AB (normalizados) sobre o veículo entre a saída do
modelo do estágio 1 congelado e a do modelo em treino:

    L_c = (1/Σm) · ‖AB(x_i) ⊙ m − AB(x̂₀) ⊙ m‖²
"""

import torch

from latent_camo.core.exceptions import DataValidationError
from latent_camo.imaging.colorspace import normalized_ab
from latent_camo.optimization.losses._masks import masked_mean_square


def color_consistency_loss(x_stage1: torch.Tensor, x_stage2: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
    """
    Raises:
        DegenerateRegionError: Máscara vazia
    """
    if x_stage1.shape != x_stage2.shape:
        raise DataValidationError(
            f"Saídas dos estágios com formatos diferentes: {tuple(x_stage1.shape)} vs {tuple(x_stage2.shape)}"
        )
    return masked_mean_square(normalized_ab(x_stage1), normalized_ab(x_stage2), m, "máscara do veículo")


class ColorConsistencyLoss:
    """Mantém a paleta do estágio 1 durante o ataque caixa branca."""

    name = "color"

    def __init__(self, weight: float = 2.0):
        self.weight = weight

    def calculate(self, x_stage1: torch.Tensor, x_stage2: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
        return color_consistency_loss(x_stage1, x_stage2, m)
