"""Avaliação: SSIM, defesas, harness de ataque/defesa/transferência e relatórios."""

from latent_camo.evaluation.defenses import (
    DEFENSES,
    BilateralDefense,
    NoDefense,
    NonLocalMeansDefense,
    get_defense,
    nl_means,
)
from latent_camo.evaluation.harness import (
    ConditionArtifacts,
    EvaluationHarness,
    load_condition_artifacts,
    rebuild_report,
    score_condition,
)
from latent_camo.evaluation.metrics import luma, ssim, vehicle_crop
from latent_camo.evaluation.report_exporter import ReportExporter, load_report, merge_reports

__all__ = [
    "DEFENSES",
    "BilateralDefense",
    "NoDefense",
    "NonLocalMeansDefense",
    "get_defense",
    "nl_means",
    "ConditionArtifacts",
    "EvaluationHarness",
    "load_condition_artifacts",
    "rebuild_report",
    "score_condition",
    "luma",
    "ssim",
    "vehicle_crop",
    "ReportExporter",
    "load_report",
    "merge_reports",
]
