"""
Treino em dois estágios do denoiser condicional, variante de um estágio,
inferência e benchmark de ablação.
"""

from latent_camo.optimization.base_trainer import (
    StageArtifacts,
    StageTrainer,
    checkpoint_steps,
    latest_checkpoint,
)
from latent_camo.optimization.benchmark import AblationBenchmark, AblationComparison, BenchmarkResult
from latent_camo.optimization.denoiser_pretrainer import DenoiserPretrainer
from latent_camo.optimization.factory import TrainerFactory, load_stage_artifacts, stage_config
from latent_camo.optimization.inference import CamouflageGenerator, InferenceResult, default_steps, infer
from latent_camo.optimization.no_box_trainer import NoBoxTrainer
from latent_camo.optimization.one_stage_trainer import OneStageTrainer
from latent_camo.optimization.white_box_trainer import WhiteBoxTrainer

__all__ = [
    "StageArtifacts",
    "StageTrainer",
    "checkpoint_steps",
    "latest_checkpoint",
    "AblationBenchmark",
    "AblationComparison",
    "BenchmarkResult",
    "DenoiserPretrainer",
    "TrainerFactory",
    "load_stage_artifacts",
    "stage_config",
    "CamouflageGenerator",
    "InferenceResult",
    "default_steps",
    "infer",
    "NoBoxTrainer",
    "OneStageTrainer",
    "WhiteBoxTrainer",
]
