"""
Inferência dos detectores: decodificação de caixas com NMS e seleção de
logits para a perda adversarial.
"""

from typing import List, Optional, Sequence, Tuple

import torch
from torchvision.ops import nms

from latent_camo.core.exceptions import DegenerateRegionError
from latent_camo.core.interfaces import BoxXYXY, Detection, DetectionSet
from latent_camo.detection.model import BACKGROUND_CLASS, VEHICLE_CLASS, ToyDetector, decode_boxes
from latent_camo.detection.training import positive_cells
from latent_camo.utils.validators import validate_nonempty_mask


def detect_boxes(
    model: ToyDetector,
    img: torch.Tensor,
    conf_threshold: float = 0.5,
    nms_iou: float = 0.5,
    image_id: str = "",
    ground_truth: Optional[Sequence[BoxXYXY]] = None,
) -> DetectionSet:
    """
    Detecta veículos em uma imagem (3, H, W).

    Células com probabilidade de veículo estritamente acima do limiar geram
    caixas; o NMS guloso remove sobreposições com IoU > nms_iou.

    Returns:
        DetectionSet: Detecções em ordem de confiança decrescente
    """
    with torch.no_grad():
        logits, offsets = model(img.unsqueeze(0) if img.dim() == 3 else img)
    return detections_from_outputs(
        logits[0], offsets[0], tuple(img.shape[-2:]), conf_threshold, nms_iou, image_id, ground_truth
    )


def detections_from_outputs(
    logits: torch.Tensor,
    offsets: torch.Tensor,
    image_size: Tuple[int, int],
    conf_threshold: float,
    nms_iou: float,
    image_id: str = "",
    ground_truth: Optional[Sequence[BoxXYXY]] = None,
) -> DetectionSet:
    """Caixas de uma única saída (G, G, 2) / (G, G, 4) do detector."""
    probs = torch.softmax(logits.detach().to(torch.float64), dim=-1)[..., VEHICLE_CLASS].reshape(-1)
    boxes = decode_boxes(offsets.detach().to(torch.float64), image_size).reshape(-1, 4)
    keep = probs > conf_threshold
    keep &= (boxes[:, 2] > boxes[:, 0]) & (boxes[:, 3] > boxes[:, 1])
    probs, boxes = probs[keep], boxes[keep]
    if len(probs):
        survivors = nms(boxes, probs, nms_iou)
        probs, boxes = probs[survivors], boxes[survivors]
    detections = [Detection(tuple(b.tolist()), float(p)) for b, p in zip(boxes, probs)]
    return DetectionSet(image_id=image_id, detections=detections, ground_truth=list(ground_truth or []))


def detect_batch(
    model: ToyDetector,
    images: torch.Tensor,
    image_ids: Sequence[str],
    ground_truths: Sequence[Sequence[BoxXYXY]],
    conf_threshold: float = 0.5,
    nms_iou: float = 0.5,
) -> List[DetectionSet]:
    """Aplica `detect_boxes` a um lote (B, 3, H, W)."""
    with torch.no_grad():
        logits, offsets = model(images)
    size = tuple(images.shape[-2:])
    return [
        detections_from_outputs(logits[i], offsets[i], size, conf_threshold, nms_iou, image_ids[i], ground_truths[i])
        for i in range(len(images))
    ]


def adversarial_logit_selection(
    model: ToyDetector,
    x_comp: torch.Tensor,
    m: torch.Tensor,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Logits das células cujo centro está dentro da máscara, com alvo = fundo.

    Args:
        model: Detector (parâmetros não são alterados)
        x_comp: Imagem composta (3, H, W) ou (B, 3, H, W), diferenciável
        m: Máscara do veículo (H, W), (1, H, W) ou (B, 1, H, W)

    Returns:
        (logits (N, 2), alvos (N,) = classe de fundo)

    Raises:
        DegenerateRegionError: Máscara vazia ou nenhuma célula selecionada
    """
    batched = x_comp.dim() == 4
    images = x_comp if batched else x_comp.unsqueeze(0)
    validate_nonempty_mask(m, "Máscara do veículo")
    logits, _ = model(images)
    selected = positive_cells(m)
    if selected.dim() == 2:
        selected = selected.unsqueeze(0).expand(images.shape[0], -1, -1)
    rows = logits[selected.to(logits.device)]
    if rows.shape[0] == 0:
        raise DegenerateRegionError("Nenhum centro de célula dentro da máscara do veículo")
    targets = torch.full((rows.shape[0],), BACKGROUND_CLASS, dtype=torch.long, device=rows.device)
    return rows, targets
