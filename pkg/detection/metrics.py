"""
Métricas de detecção: AP50 (interpolação em todos os pontos), limiar de F1
ótimo e taxa de sucesso do ataque.
"""

from typing import List, Sequence, Tuple, Union

import numpy as np
import torch
from torchvision.ops import box_iou

from latent_camo.core.exceptions import DataValidationError
from latent_camo.core.interfaces import DetectionSet

IOU_THRESHOLD = 0.5

SetsLike = Union[DetectionSet, Sequence[DetectionSet]]


def _as_list(sets: SetsLike) -> List[DetectionSet]:
    return [sets] if isinstance(sets, DetectionSet) else list(sets)


def _iou_matrix(detections: DetectionSet) -> np.ndarray:
    if not detections.detections or not detections.ground_truth:
        return np.zeros((len(detections.detections), len(detections.ground_truth)))
    boxes = torch.tensor([d.box for d in detections.detections], dtype=torch.float64)
    gt = torch.tensor(detections.ground_truth, dtype=torch.float64)
    return box_iou(boxes, gt).numpy()


def match_detections(ds: DetectionSet, iou_threshold: float = IOU_THRESHOLD) -> np.ndarray:
    """
    Casamento guloso em ordem de confiança decrescente.

    Cada detecção casa com a verdade ainda livre de maior IoU (>= limiar);
    cada verdade casa no máximo uma vez.

    Returns:
        np.ndarray: Booleano por detecção (verdadeiro positivo), na ordem de `ds.detections`
    """
    ious = _iou_matrix(ds)
    matched = np.zeros(len(ds.ground_truth), dtype=bool)
    tp = np.zeros(len(ds.detections), dtype=bool)
    for i in range(len(ds.detections)):
        if not len(ds.ground_truth):
            break
        candidates = np.where(matched, -1.0, ious[i])
        best = int(np.argmax(candidates))
        if candidates[best] >= iou_threshold:
            matched[best] = True
            tp[i] = True
    return tp


def _scored_matches(sets: List[DetectionSet]) -> Tuple[np.ndarray, np.ndarray, int]:
    """Confianças e flags TP de todas as detecções (ordem estável global) e o total de verdades."""
    confidences: List[float] = []
    flags: List[bool] = []
    for ds in sets:
        confidences.extend(ds.confidences)
        flags.extend(match_detections(ds).tolist())
    n_gt = sum(len(ds.ground_truth) for ds in sets)
    return np.asarray(confidences, dtype=np.float64), np.asarray(flags, dtype=bool), n_gt


def ap50(sets: SetsLike) -> float:
    """
    Precisão média a IoU >= 0.5 com interpolação em todos os pontos.

    Sem verdades e sem detecções: 1.0 (vácuo). Sem verdades com detecções: 0.0.

    Args:
        sets: Um DetectionSet ou uma sequência (uma por imagem)

    Returns:
        float: AP50 em [0, 1]
    """
    sets = _as_list(sets)
    confidences, flags, n_gt = _scored_matches(sets)
    if n_gt == 0:
        return 1.0 if len(confidences) == 0 else 0.0
    if len(confidences) == 0:
        return 0.0

    order = np.argsort(-confidences, kind="stable")
    tp = np.cumsum(flags[order])
    fp = np.cumsum(~flags[order])
    recall = tp / n_gt
    precision = tp / np.maximum(tp + fp, np.finfo(np.float64).eps)

    # Envelope de precisão (máximo à direita)
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    changes = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changes + 1] - mrec[changes]) * mpre[changes + 1]))


def _f1(confidences: np.ndarray, flags: np.ndarray, n_gt: int, threshold: float) -> float:
    kept = confidences >= threshold
    tp = int(flags[kept].sum())
    fp = int(kept.sum()) - tp
    fn = n_gt - tp
    denominator = 2 * tp + fp + fn
    return 2 * tp / denominator if denominator else 0.0


def f1_at_threshold(sets: SetsLike, threshold: float) -> float:
    """F1 a IoU >= 0.5 considerando detecções com confiança >= threshold."""
    return _f1(*_scored_matches(_as_list(sets)), threshold)


def f1_optimal_threshold(validation_sets: SetsLike) -> float:
    """
    Limiar de confiança que maximiza o F1 na validação.

    Candidatos: cada confiança distinta presente; empates favorecem o limiar mais alto.

    Raises:
        DataValidationError: Nenhuma detecção em nenhuma imagem
    """
    confidences, flags, n_gt = _scored_matches(_as_list(validation_sets))
    if len(confidences) == 0:
        raise DataValidationError("Nenhuma detecção na validação: limiar de F1 indefinido")

    best_threshold, best_f1 = None, -1.0
    for threshold in np.unique(confidences):  # ordem crescente
        f1 = _f1(confidences, flags, n_gt, float(threshold))
        if f1 >= best_f1:
            best_threshold, best_f1 = float(threshold), f1
    return best_threshold


def attack_success_rate(camouflaged_sets: SetsLike, threshold: float) -> float:
    """
    Fração de veículos camuflados sem nenhuma detecção com confiança >= threshold
    e IoU >= 0.5 contra a caixa verdadeira.

    Raises:
        DataValidationError: Conjunto vazio (sem verdades)
    """
    sets = _as_list(camouflaged_sets)
    total, evaded = 0, 0
    for ds in sets:
        ious = _iou_matrix(ds)
        confident = np.asarray([d.confidence >= threshold for d in ds.detections], dtype=bool)
        for j in range(len(ds.ground_truth)):
            total += 1
            hit = bool(np.any(confident & (ious[:, j] >= IOU_THRESHOLD))) if len(ds.detections) else False
            evaded += 0 if hit else 1
    if total == 0:
        raise DataValidationError("Conjunto vazio: taxa de sucesso do ataque indefinida")
    return evaded / total
