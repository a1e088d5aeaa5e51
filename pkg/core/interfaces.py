"""
Interfaces Abstratas (ABC) e entidades compartilhadas do sistema de camuflagem.

Este módulo define os contratos que devem ser implementados por:
- Treinadores de estágio (No-Box, White-Box, estágio único, pré-treino)
- Defesas de pré-processamento (NLM, filtro bilateral)
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

BoxXYXY = Tuple[float, float, float, float]


@dataclass
class Detection:
    """Uma detecção: caixa (x1, y1, x2, y2) em pixels e confiança em [0, 1]."""

    box: BoxXYXY
    confidence: float

    def __post_init__(self):
        self.box = tuple(float(v) for v in self.box)
        self.confidence = float(self.confidence)
        x1, y1, x2, y2 = self.box
        if x2 <= x1 or y2 <= y1:
            raise ValueError(f"Caixa de área não positiva: {self.box}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"Confiança fora de [0, 1]: {self.confidence}")


@dataclass
class DetectionSet:
    """
    Detecções e verdade de campo de uma imagem.

    As detecções ficam em ordem de confiança decrescente (ordenação estável).
    """

    image_id: str
    detections: List[Detection] = field(default_factory=list)
    ground_truth: List[BoxXYXY] = field(default_factory=list)

    def __post_init__(self):
        self.detections = sorted(self.detections, key=lambda d: -d.confidence)
        self.ground_truth = [tuple(float(v) for v in box) for box in self.ground_truth]

    @property
    def confidences(self) -> List[float]:
        return [d.confidence for d in self.detections]

    def above(self, threshold: float) -> List[Detection]:
        """Detecções com confiança >= threshold."""
        return [d for d in self.detections if d.confidence >= threshold]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "image_id": self.image_id,
            "detections": [{"box": list(d.box), "confidence": d.confidence} for d in self.detections],
            "ground_truth": [list(b) for b in self.ground_truth],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DetectionSet":
        return cls(
            image_id=str(data["image_id"]),
            detections=[Detection(tuple(d["box"]), d["confidence"]) for d in data.get("detections", [])],
            ground_truth=[tuple(b) for b in data.get("ground_truth", [])],
        )


@dataclass
class TrainingResult:
    """Resultado de um treino de estágio."""

    stage: str
    run_dir: Path
    checkpoint_dir: Path
    steps: int
    final_report: Optional[Dict[str, Any]] = None
    skipped_records: List[str] = field(default_factory=list)
    execution_time: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)


class BaseTrainer(ABC):
    """
    Interface abstrata para os treinadores do denoiser condicional.

    Define o contrato comum dos estágios, permitindo trocar o estágio sem
    modificar o código cliente (CLI, benchmark de ablação).
    """

    @abstractmethod
    def train(self, records: Sequence[Any], run_dir: Path) -> TrainingResult:
        """
        Executa o treino e grava o diretório da execução.

        Args:
            records: Registros de treino (SceneRecord)
            run_dir: Diretório da execução (config.json, losses.jsonl, checkpoints/, probe/)

        Returns:
            TrainingResult: Resumo do treino

        Raises:
            NotReadyError: Artefato pré-requisito ausente
            NumericalError: Perda não finita
        """
        pass

    @abstractmethod
    def get_trainer_name(self) -> str:
        """Retorna o nome do estágio treinado."""
        pass


class ImageDefense(ABC):
    """Defesa de pré-processamento aplicada a imagens HWC em [0, 1] antes da detecção."""

    name: str = "none"

    @abstractmethod
    def apply(self, image: np.ndarray) -> np.ndarray:
        """
        Filtra uma imagem (H, W, 3) float em [0, 1].

        Returns:
            np.ndarray: Imagem filtrada com o mesmo formato
        """
        pass
