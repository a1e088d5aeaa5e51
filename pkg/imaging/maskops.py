"""
Álgebra de máscaras binárias: dilatação, anel, reamostragem e composição.

Máscaras são tensores (H, W), (1, H, W) ou (B, 1, H, W) com valores em {0, 1};
as operações preservam o número de dimensões da entrada.
"""

from typing import Callable

import torch
import torch.nn.functional as F

from latent_camo.core.exceptions import DataValidationError
from latent_camo.utils.validators import (
    validate_binary_mask,
    validate_odd_kernel,
    validate_rgb_image,
)


def _as_4d(mask: torch.Tensor, fn: Callable[[torch.Tensor], torch.Tensor]) -> torch.Tensor:
    """Aplica `fn` sobre a máscara vista como (B, 1, H, W) e restaura o formato."""
    if mask.dim() == 2:
        return fn(mask[None, None])[0, 0]
    if mask.dim() == 3:
        return fn(mask[:, None])[:, 0]
    if mask.dim() == 4:
        return fn(mask)
    raise DataValidationError(
        f"máscara deve ter 2, 3 ou 4 dimensões, recebido {tuple(mask.shape)}"
    )


def dilate(m: torch.Tensor, kernel_px: int) -> torch.Tensor:
    """
    Dilatação morfológica com elemento estruturante quadrado de lado `kernel_px`.

    Fora da imagem vale zero (a máscara nunca ultrapassa o quadro).

    Args:
        m: Máscara binária
        kernel_px: Lado do quadrado, ímpar e >= 1

    Returns:
        torch.Tensor: Máscara dilatada (contém a entrada)

    Raises:
        DataValidationError: Kernel par ou não positivo, ou máscara não binária
    """
    validate_odd_kernel(kernel_px)
    validate_binary_mask(m, "m")
    if kernel_px == 1:
        return m.clone()
    pad = kernel_px // 2
    # max-pool com padding implícito de -inf equivale a zero-padding em máscaras {0, 1}
    return _as_4d(m, lambda x: F.max_pool2d(x, kernel_px, stride=1, padding=pad))


def annulus(m: torch.Tensor, kernel_px: int) -> torch.Tensor:
    """
    Anel ao redor da máscara: dilate(m, kernel_px) AND NOT m.

    Example:
        >>> m = torch.zeros(5, 5); m[2, 2] = 1
        >>> int(annulus(m, 3).sum())
        8
    """
    return dilate(m, kernel_px) * (1 - m)


def downsample_mask(m: torch.Tensor, factor: int) -> torch.Tensor:
    """
    Reduz a máscara por média em blocos factor × factor (máscara fracionária).

    Args:
        m: Máscara binária
        factor: Fator inteiro positivo; H e W devem ser divisíveis por ele

    Returns:
        torch.Tensor: Máscara fracionária com valores em [0, 1]

    Raises:
        DataValidationError: Fator inválido ou formato não divisível
    """
    if not isinstance(factor, int) or factor < 1:
        raise DataValidationError(f"factor deve ser inteiro positivo, recebido {factor!r}")
    h, w = m.shape[-2:]
    if h % factor or w % factor:
        raise DataValidationError(
            f"Formato {h}×{w} não é divisível pelo fator {factor}"
        )
    if factor == 1:
        return m.clone()
    return _as_4d(m, lambda x: F.avg_pool2d(x, factor))


def binarize(fm: torch.Tensor, threshold: float = 0.5) -> torch.Tensor:
    """1 onde o valor é estritamente maior que `threshold`, 0 caso contrário."""
    return (fm > threshold).to(fm.dtype)


def composite(fg: torch.Tensor, bg: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
    """
    Composição mascarada: fg ⊙ m + bg ⊙ (1 − m).

    Args:
        fg: Imagem (..., 3, H, W) usada onde m = 1
        bg: Imagem (..., 3, H, W) usada onde m = 0
        m: Máscara (H, W), (1, H, W) ou (B, 1, H, W)

    Raises:
        DataValidationError: Se os formatos não forem compatíveis
    """
    validate_rgb_image(fg, "fg")
    validate_rgb_image(bg, "bg")
    if fg.shape != bg.shape:
        raise DataValidationError(
            f"fg e bg com formatos diferentes: {tuple(fg.shape)} vs {tuple(bg.shape)}"
        )
    if m.shape[-2:] != fg.shape[-2:]:
        raise DataValidationError(
            f"Máscara {tuple(m.shape)} incompatível com imagem {tuple(fg.shape)}"
        )
    if m.dim() == 2:
        m = m.unsqueeze(0)
    return fg * m + bg * (1 - m)
