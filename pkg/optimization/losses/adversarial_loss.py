"""
Componente de perda: adversarial (caixa branca).

Entropia cruzada média das células do detector cujo centro está no veículo,
contra a classe de fundo, sobre a imagem composta x_comp.
"""

import torch
import torch.nn.functional as F

from latent_camo.detection.inference import adversarial_logit_selection
from latent_camo.detection.model import ToyDetector


def adversarial_loss(detector: ToyDetector, x_comp: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
    """
    Args:
        detector: Detector alvo (somente leitura)
        x_comp: Composição do veículo estimado sobre o fundo real
        m: Máscara do veículo

    Raises:
        DegenerateRegionError: Máscara vazia ou sem células selecionadas
    """
    logits, targets = adversarial_logit_selection(detector, x_comp, m)
    return F.cross_entropy(logits, targets)


class AdversarialLoss:
    """Leva o detector a classificar o veículo como fundo."""

    name = "adversarial"

    def __init__(self, detector: ToyDetector, weight: float = 1.0):
        self.detector = detector
        self.weight = weight

    def calculate(self, x_comp: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
        return adversarial_loss(self.detector, x_comp, m)
