"""
Módulo de funções de perda modular.

Estrutura permite:
- Pesos configuráveis por estágio
- Ligar/desligar termos (ablação)
- Comparação clara do impacto de cada termo
"""

from latent_camo.optimization.losses.adversarial_loss import AdversarialLoss, adversarial_loss
from latent_camo.optimization.losses.background_loss import BackgroundLoss, background_loss
from latent_camo.optimization.losses.color_consistency_loss import (
    ColorConsistencyLoss,
    color_consistency_loss,
)
from latent_camo.optimization.losses.composite_loss import (
    STAGE1_TERMS,
    STAGE2_TERMS,
    CompositeLoss,
    LossInputs,
    combine_stage1,
    combine_stage2,
)
from latent_camo.optimization.losses.struct_loss import StructLoss, struct_loss
from latent_camo.optimization.losses.style_loss import (
    StyleLoss,
    region_mean,
    style_loss,
    style_loss_from_latents,
)

__all__ = [
    "AdversarialLoss",
    "adversarial_loss",
    "BackgroundLoss",
    "background_loss",
    "ColorConsistencyLoss",
    "color_consistency_loss",
    "STAGE1_TERMS",
    "STAGE2_TERMS",
    "CompositeLoss",
    "LossInputs",
    "combine_stage1",
    "combine_stage2",
    "StructLoss",
    "struct_loss",
    "StyleLoss",
    "region_mean",
    "style_loss",
    "style_loss_from_latents",
]
