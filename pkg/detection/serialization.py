"""
Serialização de DetectionSets em JSON lines (uma imagem por linha).
"""

from pathlib import Path
from typing import Iterable, List

from latent_camo.core.interfaces import DetectionSet
from latent_camo.core.models import read_jsonl, write_jsonl


def write_detection_sets(path: Path, sets: Iterable[DetectionSet]) -> Path:
    """Grava {image_id, detections, ground_truth} por linha."""
    return write_jsonl(path, (ds.to_dict() for ds in sets))


def read_detection_sets(path: Path) -> List[DetectionSet]:
    """Lê os DetectionSets gravados por `write_detection_sets`."""
    return [DetectionSet.from_dict(item) for item in read_jsonl(path)]
