"""
Componente de perda: preservação de estrutura.

Diferença L2 média do canal L (normalizado) dentro da máscara do veículo:

    L_struct = (1/Σm) · ‖L(x₀) ⊙ m − L(x̂₀) ⊙ m‖²
"""

import torch

from latent_camo.core.exceptions import DataValidationError
from latent_camo.imaging.colorspace import normalized_l
from latent_camo.optimization.losses._masks import masked_mean_square


def struct_loss(x0: torch.Tensor, x_hat: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
    """
    Args:
        x0: Imagem original (..., 3, H, W)
        x_hat: Imagem estimada (mesmo formato)
        m: Máscara do veículo

    Returns:
        torch.Tensor: Escalar não negativo

    Raises:
        DegenerateRegionError: Máscara vazia
    """
    if x0.shape != x_hat.shape:
        raise DataValidationError(f"x0 e x_hat com formatos diferentes: {tuple(x0.shape)} vs {tuple(x_hat.shape)}")
    return masked_mean_square(normalized_l(x0), normalized_l(x_hat), m, "máscara do veículo")


class StructLoss:
    """
    Preserva a estrutura (luminância) do veículo.

    Quanto maior a diferença de L no veículo, maior a perda.
    """

    name = "struct"

    def __init__(self, weight: float = 1.0):
        """
        Args:
            weight: Peso do termo na combinação
        """
        self.weight = weight

    def calculate(self, x0: torch.Tensor, x_hat: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
        """Valor do termo (sem peso)."""
        return struct_loss(x0, x_hat, m)
