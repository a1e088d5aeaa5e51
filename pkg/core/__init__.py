"""Core module with interfaces, exceptions and base models."""

from latent_camo.core.exceptions import (
    CamouflageError,
    CorpusLoadError,
    DataValidationError,
    DegenerateRegionError,
    InvalidConfigurationError,
    NotReadyError,
    NumericalError,
    TrainingError,
    exit_code_for,
)
from latent_camo.core.interfaces import (
    BaseTrainer,
    Detection,
    DetectionSet,
    ImageDefense,
    TrainingResult,
)
from latent_camo.core.models import EvalReport, EvalRow, LossReport

__all__ = [
    "CamouflageError",
    "CorpusLoadError",
    "DataValidationError",
    "DegenerateRegionError",
    "InvalidConfigurationError",
    "NotReadyError",
    "NumericalError",
    "TrainingError",
    "exit_code_for",
    "BaseTrainer",
    "Detection",
    "DetectionSet",
    "ImageDefense",
    "TrainingResult",
    "EvalReport",
    "EvalRow",
    "LossReport",
]
