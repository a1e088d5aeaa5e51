"""
Avaliação do ataque: AP50 limpo vs atacado, SSIM de recortes do veículo,
taxa de sucesso do ataque e latência de amostragem.

Toda linha do relatório é recomputável a partir dos artefatos gravados em
`eval/`: `detections/*.jsonl` (DetectionSets por condição) e `per_image/*.jsonl`.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import torch

from latent_camo.core.exceptions import DataValidationError, InvalidConfigurationError
from latent_camo.core.interfaces import DetectionSet, ImageDefense
from latent_camo.core.models import EvalReport, EvalRow, read_jsonl, write_jsonl
from latent_camo.corpus.generator import gen_background
from latent_camo.detection.inference import detect_boxes
from latent_camo.detection.metrics import ap50, attack_success_rate, f1_optimal_threshold
from latent_camo.detection.model import ToyDetector, require_ready
from latent_camo.detection.serialization import read_detection_sets, write_detection_sets
from latent_camo.domain.scene import SceneRecord
from latent_camo.evaluation.defenses import get_defense
from latent_camo.evaluation.metrics import ssim, vehicle_crop
from latent_camo.evaluation.report_exporter import load_report
from latent_camo.imaging.maskops import composite
from latent_camo.optimization.inference import CamouflageGenerator, InferenceResult
from latent_camo.utils.config import CorpusConfig, DetectorConfig, EvalConfig
from latent_camo.utils.logger import get_logger
from latent_camo.utils.reproducibility import derive_seed
from latent_camo.utils.tensors import image_to_tensor, tensor_to_image

logger = get_logger(__name__)

DETECTIONS_DIR = "detections"
PER_IMAGE_DIR = "per_image"
REPORT_JSON = "report.json"
REPORT_TEXT = "report.txt"


def _slug(*parts: str) -> str:
    return "__".join(p.replace(":", "-").replace("/", "-") for p in parts)


@dataclass
class ConditionArtifacts:
    """DetectionSets e medidas por imagem de uma condição de um detector."""

    clean: List[DetectionSet]
    attacked: List[DetectionSet]
    validation: List[DetectionSet]
    ssim_values: List[float] = field(default_factory=list)
    latencies: List[float] = field(default_factory=list)


def score_condition(
    detector_id: str, strategy: str, condition: str, artifacts: ConditionArtifacts
) -> EvalRow:
    """
    Agrega uma condição em uma linha do relatório.

    O limiar da ASR é o de F1 ótimo nas detecções limpas da validação; sem
    nenhuma detecção na validação a ASR fica indefinida (None).
    """
    threshold: Optional[float]
    try:
        threshold = f1_optimal_threshold(artifacts.validation)
    except DataValidationError as e:
        logger.warning(f"{detector_id}/{condition}: {e}")
        threshold = None
    asr = None
    if threshold is not None and any(ds.ground_truth for ds in artifacts.attacked):
        asr = attack_success_rate(artifacts.attacked, threshold)
    latencies = np.asarray(artifacts.latencies, dtype=np.float64)
    return EvalRow(
        detector_id=detector_id,
        strategy=strategy,
        condition=condition,
        ap50_clean=ap50(artifacts.clean),
        ap50_attacked=ap50(artifacts.attacked),
        ssim_mean=float(np.mean(artifacts.ssim_values)) if artifacts.ssim_values else None,
        asr=asr,
        latency_s_mean=float(latencies.mean()) if latencies.size else None,
        latency_s_std=float(latencies.std()) if latencies.size else None,
        threshold=threshold,
        n_images=len(artifacts.attacked),
    )


class EvaluationHarness:
    """
    Executa as avaliações de um checkpoint e grava os artefatos por imagem.

    As imagens camufladas de cada registro são geradas uma única vez e
    reutilizadas por todos os detectores, defesas e fundos.
    """

    def __init__(
        self,
        generator: CamouflageGenerator,
        eval_config: Optional[EvalConfig] = None,
        detector_config: Optional[DetectorConfig] = None,
        strategy_name: Optional[str] = None,
        out_dir: Optional[Path] = None,
        provenance: Optional[Dict[str, str]] = None,
    ):
        self.generator = generator
        self.eval_config = eval_config or EvalConfig()
        self.detector_config = detector_config or DetectorConfig()
        self.strategy_name = strategy_name or generator.strategy.mode
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.provenance = dict(provenance or {})
        self._generated: Dict[str, InferenceResult] = {}

    # ------------------------------------------------------------------
    # Geração e detecção
    # ------------------------------------------------------------------

    def generate(self, records: Sequence[SceneRecord]) -> List[InferenceResult]:
        """Imagens camufladas e compostas (em cache por id de registro)."""
        results = []
        for record in records:
            if record.record_id not in self._generated:
                self._generated[record.record_id] = self.generator.generate(record)
            results.append(self._generated[record.record_id])
        return results

    def _detect(
        self, detector: ToyDetector, images: Sequence[torch.Tensor], records: Sequence[SceneRecord]
    ) -> List[DetectionSet]:
        return [
            detect_boxes(
                detector,
                image,
                conf_threshold=self.eval_config.score_threshold,
                nms_iou=self.detector_config.nms_iou,
                image_id=record.record_id,
                ground_truth=[record.box.to_xyxy()],
            )
            for image, record in zip(images, records)
        ]

    def _limit(self, records: Sequence[SceneRecord]) -> List[SceneRecord]:
        limit = self.eval_config.max_records
        return list(records if limit is None else records[:limit])

    def _crop_ssim(self, record: SceneRecord, image: torch.Tensor) -> float:
        box = record.box.to_xyxy()
        margin = self.eval_config.crop_margin
        return ssim(vehicle_crop(record.image, box, margin), vehicle_crop(image, box, margin))

    # ------------------------------------------------------------------
    # Avaliações
    # ------------------------------------------------------------------

    def _attack_artifacts(
        self,
        detector: ToyDetector,
        test_records: Sequence[SceneRecord],
        val_records: Sequence[SceneRecord],
        defense: Optional[ImageDefense] = None,
    ) -> ConditionArtifacts:
        require_ready(detector)
        results = self.generate(test_records)
        attacked_images = [r.composited for r in results]
        if defense is not None:
            attacked_images = [image_to_tensor(defense.apply(tensor_to_image(img))) for img in attacked_images]
        clean_images = [record.image_tensor() for record in test_records]
        return ConditionArtifacts(
            clean=self._detect(detector, clean_images, test_records),
            attacked=self._detect(detector, attacked_images, test_records),
            validation=self._detect(detector, [r.image_tensor() for r in val_records], val_records),
            ssim_values=[self._crop_ssim(rec, img) for rec, img in zip(test_records, attacked_images)],
            latencies=[r.latency_s for r in results],
        )

    def evaluate(
        self,
        detectors: Mapping[str, ToyDetector],
        test_records: Sequence[SceneRecord],
        val_records: Sequence[SceneRecord],
    ) -> EvalReport:
        """
        Uma linha por detector na condição "attack".

        Raises:
            NotReadyError: Detector não treinado
        """
        test_records = self._limit(test_records)
        report = EvalReport(provenance=dict(self.provenance))
        for detector_id, detector in detectors.items():
            artifacts = self._attack_artifacts(detector, test_records, val_records)
            row = score_condition(detector_id, self.strategy_name, "attack", artifacts)
            self._persist(detector_id, "attack", test_records, artifacts)
            logger.info(
                f"{detector_id}: AP50 {row.ap50_clean:.3f} → {row.ap50_attacked:.3f}, "
                f"SSIM {row.ssim_mean}, ASR {row.asr}"
            )
            report.rows.append(row)
        return report

    def evaluate_defended(
        self,
        detector_id: str,
        detector: ToyDetector,
        test_records: Sequence[SceneRecord],
        val_records: Sequence[SceneRecord],
        defense: str,
    ) -> List[EvalRow]:
        """
        Aplica a defesa às imagens compostas antes da detecção.

        Raises:
            DataValidationError: Defesa desconhecida
        """
        filter_ = get_defense(defense, self.eval_config)
        test_records = self._limit(test_records)
        condition = f"defense:{defense}"
        artifacts = self._attack_artifacts(detector, test_records, val_records, filter_)
        self._persist(detector_id, condition, test_records, artifacts)
        return [score_condition(detector_id, self.strategy_name, condition, artifacts)]

    def evaluate_cross_background(
        self,
        detector_id: str,
        detector: ToyDetector,
        test_records: Sequence[SceneRecord],
        val_records: Sequence[SceneRecord],
        n_backgrounds: int,
        corpus_config: CorpusConfig,
        run_seed: int = 0,
    ) -> List[EvalRow]:
        """
        Recompõe cada veículo (original e camuflado) sobre `n_backgrounds`
        fundos novos da mesma cena e compara o AP50 nas duas versões.

        Requer um modelo de estratégia em nível de cena: a camuflagem não depende
        do fundo original e pode ser levada a outros fundos da mesma cena.

        Raises:
            InvalidConfigurationError: Estratégia em nível de imagem
            DataValidationError: n_backgrounds negativo
        """
        if not self.generator.strategy.is_scene_level:
            raise InvalidConfigurationError(
                "Avaliação entre fundos requer estratégia scene_level, "
                f"configurada: {self.generator.strategy.mode}"
            )
        if n_backgrounds < 0:
            raise DataValidationError(f"n_backgrounds deve ser >= 0, recebido {n_backgrounds}")
        if n_backgrounds == 0:
            return []
        require_ready(detector)
        test_records = self._limit(test_records)
        results = self.generate(test_records)

        records: List[SceneRecord] = []
        clean_images: List[torch.Tensor] = []
        camo_images: List[torch.Tensor] = []
        for record, result in zip(test_records, results):
            mask = record.mask_tensor()
            for k in range(n_backgrounds):
                seed = derive_seed(run_seed, "cross_background", record.record_id, k)
                background = image_to_tensor(gen_background(seed, record.scene_label, corpus_config))
                clean_images.append(composite(record.image_tensor(), background, mask))
                camo_images.append(composite(result.camouflaged, background, mask))
                records.append(record)

        artifacts = ConditionArtifacts(
            clean=self._detect(detector, clean_images, records),
            attacked=self._detect(detector, camo_images, records),
            validation=self._detect(detector, [r.image_tensor() for r in val_records], val_records),
            latencies=[r.latency_s for r in results],
        )
        self._persist(detector_id, "cross_background", records, artifacts)
        return [score_condition(detector_id, self.strategy_name, "cross_background", artifacts)]

    # ------------------------------------------------------------------
    # Persistência
    # ------------------------------------------------------------------

    def _persist(
        self,
        detector_id: str,
        condition: str,
        records: Sequence[SceneRecord],
        artifacts: ConditionArtifacts,
    ) -> None:
        if self.out_dir is None:
            return
        directory = self.out_dir / DETECTIONS_DIR
        for kind in ("clean", "attacked", "validation"):
            write_detection_sets(directory / f"{_slug(detector_id, condition, kind)}.jsonl", getattr(artifacts, kind))
        rows: List[Dict[str, object]] = [
            {"record_id": record.record_id, "ssim": artifacts.ssim_values[i] if artifacts.ssim_values else None}
            for i, record in enumerate(records)
        ]
        rows.extend({"latency_s": value} for value in artifacts.latencies)
        write_jsonl(self.out_dir / PER_IMAGE_DIR / f"{_slug(detector_id, condition)}.jsonl", rows)


def load_condition_artifacts(eval_dir: Path, detector_id: str, condition: str) -> ConditionArtifacts:
    """Relê os artefatos gravados de uma condição."""
    eval_dir = Path(eval_dir)
    directory = eval_dir / DETECTIONS_DIR
    sets = {
        kind: read_detection_sets(directory / f"{_slug(detector_id, condition, kind)}.jsonl")
        for kind in ("clean", "attacked", "validation")
    }
    ssim_values: List[float] = []
    latencies: List[float] = []
    for item in read_jsonl(eval_dir / PER_IMAGE_DIR / f"{_slug(detector_id, condition)}.jsonl"):
        if "latency_s" in item:
            latencies.append(float(item["latency_s"]))
        elif item.get("ssim") is not None:
            ssim_values.append(float(item["ssim"]))
    return ConditionArtifacts(sets["clean"], sets["attacked"], sets["validation"], ssim_values, latencies)


def rebuild_report(eval_dir: Path) -> EvalReport:
    """
    Recalcula todas as linhas de `report.json` a partir dos artefatos por imagem.

    Raises:
        NotReadyError: Relatório ausente
    """
    original = load_report(Path(eval_dir) / REPORT_JSON)
    rebuilt = EvalReport(provenance=dict(original.provenance))
    for row in original.rows:
        artifacts = load_condition_artifacts(eval_dir, row.detector_id, row.condition)
        rebuilt.rows.append(score_condition(row.detector_id, row.strategy, row.condition, artifacts))
    return rebuilt
