"""
Função de perda composta dos dois estágios.

Combina os termos de perda em um único escalar e produz o LossReport do passo.
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Union

import torch

from latent_camo.backend.autoencoder import LatentAutoencoder
from latent_camo.core.exceptions import DataValidationError, InvalidConfigurationError
from latent_camo.core.models import LossReport
from latent_camo.critic.model import LatentCritic
from latent_camo.detection.model import ToyDetector
from latent_camo.imaging.maskops import composite
from latent_camo.optimization.losses.adversarial_loss import AdversarialLoss
from latent_camo.optimization.losses.background_loss import BackgroundLoss
from latent_camo.optimization.losses.color_consistency_loss import ColorConsistencyLoss
from latent_camo.optimization.losses.struct_loss import StructLoss
from latent_camo.optimization.losses.style_loss import StyleLoss
from latent_camo.utils.config import LossToggles, LossWeights

Number = Union[float, torch.Tensor]

STAGE1_TERMS = ("struct", "style", "background")
STAGE2_TERMS = STAGE1_TERMS + ("adversarial", "color")


def _check_terms(terms: Mapping[str, Number], expected: Sequence[str]) -> None:
    missing = [t for t in expected if t not in terms]
    extra = [t for t in terms if t not in expected]
    if missing:
        raise DataValidationError(f"Termos de perda ausentes: {missing}")
    if extra:
        raise DataValidationError(f"Termos de perda inesperados para o estágio: {extra}")


def combine_stage1(terms: Mapping[str, Number], w: LossWeights) -> Number:
    """
    L_i = s · L_struct + α · L_s + β · L_b

    Raises:
        DataValidationError: Termo ausente ou termo de estágio 2 presente
    """
    _check_terms(terms, STAGE1_TERMS)
    return w.struct * terms["struct"] + w.alpha * terms["style"] + w.beta * terms["background"]


def combine_stage2(terms: Mapping[str, Number], w: LossWeights) -> Number:
    """
    L_a = L_i + λ · L_adv + γ · L_c

    Raises:
        DataValidationError: Termo ausente
    """
    _check_terms(terms, STAGE2_TERMS)
    stage1 = {name: terms[name] for name in STAGE1_TERMS}
    return combine_stage1(stage1, w) + w.lambda_ * terms["adversarial"] + w.gamma * terms["color"]


@dataclass
class LossInputs:
    """Tensores de um passo de treino (lote)."""

    x0: torch.Tensor  # (B, 3, H, W) imagem original
    x_hat: torch.Tensor  # (B, 3, H, W) decodificação da estimativa de um passo
    mask: torch.Tensor  # (B, 1, H, W) máscara do veículo
    x_s: torch.Tensor  # referência de estilo
    m_s: torch.Tensor  # máscara de referência
    x_stage1: Optional[torch.Tensor] = None  # saída do modelo congelado do estágio 1


class CompositeLoss:
    """
    Perda composta que combina os termos de um estágio.

    Fórmula:
    L_i = s · L_struct + α · L_s + β · L_b                  (no_box)
    L_a = L_i + λ · L_adv + γ · L_c                         (white_box, one_stage)

    Termos desligados por `LossToggles` (ou com peso zero) não são calculados
    e entram com valor 0.
    """

    def __init__(
        self,
        stage: str,
        weights: LossWeights,
        critic: LatentCritic,
        encoder: LatentAutoencoder,
        detector: Optional[ToyDetector] = None,
        toggles: Optional[LossToggles] = None,
        style_stages: Optional[Sequence[int]] = None,
        mask_mode: str = "max",
        selection_threshold: float = 0.5,
    ):
        """
        Args:
            stage: "no_box", "white_box" ou "one_stage"
            weights: Pesos efetivos do estágio
            critic: Crítico latente treinado
            encoder: Autoencoder treinado
            detector: Detector alvo (obrigatório fora do no_box)
            toggles: Termos ligados/desligados (ablação)
            selection_threshold: Limiar das máscaras na resolução latente
        """
        if stage not in ("no_box", "white_box", "one_stage"):
            raise InvalidConfigurationError(f"Estágio desconhecido: {stage}")
        if stage != "no_box" and detector is None:
            raise InvalidConfigurationError(f"O estágio {stage} requer um detector")
        self.stage = stage
        self.weights = weights
        self.toggles = toggles or LossToggles()
        self.term_names = STAGE1_TERMS if stage == "no_box" else STAGE2_TERMS

        self.struct_loss = StructLoss(weights.struct)
        self.style_loss = StyleLoss(critic, encoder, weights.alpha, style_stages, mask_mode, selection_threshold)
        self.background_loss = BackgroundLoss(critic, encoder, weights.beta, selection_threshold)
        self.adversarial_loss = AdversarialLoss(detector, weights.lambda_) if detector is not None else None
        self.color_loss = ColorConsistencyLoss(weights.gamma)

    def is_active(self, term: str) -> bool:
        """Termo calculado neste estágio (ligado e com peso positivo)."""
        return (
            term in self.term_names
            and self.toggles.enabled(term)
            and self.weights.as_term_weights()[term] > 0
        )

    def term_weights(self) -> Dict[str, float]:
        all_weights = self.weights.as_term_weights()
        return {name: all_weights[name] for name in self.term_names}

    def compute_terms(self, inputs: LossInputs) -> Dict[str, torch.Tensor]:
        """Calcula todos os termos do estágio (inativos valem 0)."""
        zero = inputs.x_hat.new_zeros(())
        terms: Dict[str, torch.Tensor] = {name: zero for name in self.term_names}
        if self.is_active("struct"):
            terms["struct"] = self.struct_loss.calculate(inputs.x0, inputs.x_hat, inputs.mask)
        if self.is_active("style"):
            terms["style"] = self.style_loss.calculate(inputs.x_hat, inputs.mask, inputs.x_s, inputs.m_s)
        if self.is_active("background"):
            terms["background"] = self.background_loss.calculate(inputs.x0, inputs.x_hat, inputs.mask)
        if self.is_active("adversarial"):
            x_comp = composite(inputs.x_hat, inputs.x0, inputs.mask)
            terms["adversarial"] = self.adversarial_loss.calculate(x_comp, inputs.mask)
        if self.is_active("color"):
            if inputs.x_stage1 is None:
                raise DataValidationError("Consistência de cor requer a saída do estágio 1 congelado")
            terms["color"] = self.color_loss.calculate(inputs.x_stage1, inputs.x_hat, inputs.mask)
        return terms

    def calculate(self, terms: Mapping[str, Number]) -> Number:
        """Combina os termos conforme o estágio."""
        if self.stage == "no_box":
            return combine_stage1(terms, self.weights)
        return combine_stage2(terms, self.weights)

    def get_components_breakdown(self, terms: Mapping[str, Number]) -> Dict[str, float]:
        """
        Retorna o valor de cada termo como float.

        Útil para logs e análise.
        """
        return {name: float(value) for name, value in terms.items()}

    def report(self, step: int, terms: Mapping[str, Number]) -> LossReport:
        """LossReport do passo (total recomputado a partir dos termos e pesos)."""
        return LossReport.from_terms(step, self.get_components_breakdown(terms), self.term_weights())
