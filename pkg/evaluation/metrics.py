"""
Métricas de imagem da avaliação: SSIM em luminância e recorte do veículo.
"""

import math
from typing import Sequence, Union

import numpy as np
import torch
from skimage.metrics import structural_similarity

from latent_camo.core.exceptions import DataValidationError, DegenerateRegionError
from latent_camo.utils.tensors import tensor_to_image

ImageLike = Union[np.ndarray, torch.Tensor]

# Luma ITU-R BT.601
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)
SSIM_SIGMA = 1.5
SSIM_WINDOW = 11


def as_hwc(img: ImageLike) -> np.ndarray:
    """Imagem RGB como array (H, W, 3) float64; tensores (3, H, W) são transpostos."""
    if isinstance(img, torch.Tensor):
        if img.dim() != 3 or img.shape[0] != 3:
            raise DataValidationError(f"Tensor de imagem deve ser (3, H, W), recebido {tuple(img.shape)}")
        img = tensor_to_image(img)
    array = np.asarray(img, dtype=np.float64)
    if array.ndim != 3 or array.shape[2] != 3:
        raise DataValidationError(f"Imagem deve ser (H, W, 3), recebido {array.shape}")
    return array


def luma(img: ImageLike) -> np.ndarray:
    """Conversão para tons de cinza (H, W)."""
    return as_hwc(img) @ LUMA_WEIGHTS


def ssim(a: ImageLike, b: ImageLike) -> float:
    """
    SSIM em luminância com janela gaussiana 11×11 (σ = 1.5), K1 = 0.01, K2 = 0.03,
    faixa de dados 1, média sobre as posições válidas.

    Raises:
        DataValidationError: Formatos diferentes ou imagem menor que a janela
    """
    ga, gb = luma(a), luma(b)
    if ga.shape != gb.shape:
        raise DataValidationError(f"SSIM requer formatos iguais: {ga.shape} vs {gb.shape}")
    if min(ga.shape) < SSIM_WINDOW:
        raise DataValidationError(f"Imagem {ga.shape} menor que a janela SSIM {SSIM_WINDOW}×{SSIM_WINDOW}")
    value = structural_similarity(
        ga,
        gb,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        data_range=1.0,
        K1=0.01,
        K2=0.03,
    )
    return float(value)


def vehicle_crop(img: ImageLike, box: Sequence[float], margin: float = 0.1) -> np.ndarray:
    """
    Recorte da caixa (x1, y1, x2, y2) expandida por `margin` de cada lado e
    limitada ao quadro; bordas arredondadas para fora.

    Raises:
        DegenerateRegionError: Caixa de área nula (antes ou depois do recorte ao quadro)
    """
    array = as_hwc(img)
    height, width = array.shape[:2]
    x1, y1, x2, y2 = (float(v) for v in box)
    w, h = x2 - x1, y2 - y1
    if w <= 0 or h <= 0:
        raise DegenerateRegionError(f"Caixa degenerada para recorte: {tuple(box)}")
    left = max(0, math.floor(x1 - margin * w))
    top = max(0, math.floor(y1 - margin * h))
    right = min(width, math.ceil(x2 + margin * w))
    bottom = min(height, math.ceil(y2 + margin * h))
    if right <= left or bottom <= top:
        raise DegenerateRegionError(f"Caixa {tuple(box)} fora do quadro {width}×{height}")
    return array[top:bottom, left:right]
