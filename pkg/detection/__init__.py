"""Detectores de brinquedo, inferência com NMS e métricas de detecção."""

from latent_camo.detection.inference import (
    adversarial_logit_selection,
    detect_batch,
    detect_boxes,
    detections_from_outputs,
)
from latent_camo.detection.metrics import (
    ap50,
    attack_success_rate,
    f1_at_threshold,
    f1_optimal_threshold,
    match_detections,
)
from latent_camo.detection.model import (
    BACKGROUND_CLASS,
    CELL_SIZE,
    VEHICLE_CLASS,
    DetectorSpec,
    ToyDetector,
    decode_boxes,
    require_ready,
)
from latent_camo.detection.serialization import read_detection_sets, write_detection_sets
from latent_camo.detection.training import DetectorTrainingResult, positive_cells, train_detector

__all__ = [
    "adversarial_logit_selection",
    "detect_batch",
    "detect_boxes",
    "detections_from_outputs",
    "ap50",
    "attack_success_rate",
    "f1_at_threshold",
    "f1_optimal_threshold",
    "match_detections",
    "BACKGROUND_CLASS",
    "CELL_SIZE",
    "VEHICLE_CLASS",
    "DetectorSpec",
    "ToyDetector",
    "decode_boxes",
    "require_ready",
    "read_detection_sets",
    "write_detection_sets",
    "DetectorTrainingResult",
    "positive_cells",
    "train_detector",
]
