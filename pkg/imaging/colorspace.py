"""
Conversões diferenciáveis entre sRGB e CIELAB (iluminante D65).

Convenção: tensores com canais na dimensão -3, ou seja (..., 3, H, W).
Para a imagem LAB os canais são (L, a, b), com L em [0, 100] e a, b em
torno de [-128, 127].

Os cálculos internos são feitos em float64 e convertidos de volta para o
dtype de entrada: isso mantém |a|, |b| na ordem de 1e-12 para entradas
acromáticas mesmo quando a entrada é float32.
"""

import torch

from latent_camo.core.exceptions import DataValidationError
from latent_camo.utils.validators import validate_finite, validate_rgb_image

# Matriz sRGB linear → XYZ (D65)
_RGB_TO_XYZ = torch.tensor(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ],
    dtype=torch.float64,
)
_XYZ_TO_RGB = torch.linalg.inv(_RGB_TO_XYZ)

# Ponto branco = soma das linhas da matriz, assim (1, 1, 1) mapeia exatamente em L=100
_WHITE = _RGB_TO_XYZ.sum(dim=1)

_DELTA = 6.0 / 29.0
_EPSILON = _DELTA**3
_SRGB_DECODE_THRESHOLD = 0.04045
_SRGB_ENCODE_THRESHOLD = 0.0031308


def _srgb_to_linear(c: torch.Tensor) -> torch.Tensor:
    # Na junção vale o ramo inferior (derivada unilateral determinística)
    upper = ((c.clamp(min=_SRGB_DECODE_THRESHOLD) + 0.055) / 1.055) ** 2.4
    return torch.where(c > _SRGB_DECODE_THRESHOLD, upper, c / 12.92)


def _linear_to_srgb(c: torch.Tensor) -> torch.Tensor:
    upper = 1.055 * c.clamp(min=_SRGB_ENCODE_THRESHOLD) ** (1.0 / 2.4) - 0.055
    return torch.where(c > _SRGB_ENCODE_THRESHOLD, upper, 12.92 * c)


def _lab_f(t: torch.Tensor) -> torch.Tensor:
    # clamp evita derivada infinita da raiz cúbica no ramo descartado
    cube_root = t.clamp(min=_EPSILON) ** (1.0 / 3.0)
    return torch.where(t > _EPSILON, cube_root, t / (3 * _DELTA**2) + 4.0 / 29.0)


def _lab_f_inv(t: torch.Tensor) -> torch.Tensor:
    return torch.where(t > _DELTA, t**3, 3 * _DELTA**2 * (t - 4.0 / 29.0))


def _apply_matrix(matrix: torch.Tensor, img: torch.Tensor) -> torch.Tensor:
    """Aplica uma matriz 3×3 sobre a dimensão de canais (-3)."""
    return torch.einsum("ij,...jhw->...ihw", matrix.to(img.device), img)


def _expand_white(img: torch.Tensor) -> torch.Tensor:
    return _WHITE.to(img.device).view(3, 1, 1)


def rgb_to_lab(img: torch.Tensor) -> torch.Tensor:
    """
    Converte sRGB → sRGB linear → XYZ (D65) → CIELAB.

    Args:
        img: Tensor (..., 3, H, W) com valores em [0, 1]

    Returns:
        torch.Tensor: Tensor (..., 3, H, W) com canais (L, a, b), mesmo dtype da entrada

    Raises:
        DataValidationError: Se a entrada não for finita ou estiver fora de [0, 1]

    Example:
        >>> rgb_to_lab(torch.ones(3, 1, 1)).flatten()
        tensor([100., 0., 0.])
    """
    validate_rgb_image(img, "img")
    x = img.to(torch.float64)
    xyz = _apply_matrix(_RGB_TO_XYZ, _srgb_to_linear(x)) / _expand_white(x)
    f = _lab_f(xyz)
    fx, fy, fz = f[..., 0, :, :], f[..., 1, :, :], f[..., 2, :, :]
    lab = torch.stack(
        [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)],
        dim=-3,
    )
    return lab.to(img.dtype)


def lab_to_rgb(lab: torch.Tensor) -> torch.Tensor:
    """
    Inversa de `rgb_to_lab`; a saída é limitada a [0, 1].

    Args:
        lab: Tensor (..., 3, H, W) com canais (L, a, b), L em [0, 100]

    Returns:
        torch.Tensor: Imagem sRGB (..., 3, H, W)

    Raises:
        DataValidationError: Se o formato for inválido, houver NaN/Inf ou L fora de [0, 100]
    """
    if lab.dim() < 3 or lab.shape[-3] != 3:
        raise DataValidationError(
            f"lab deve ter formato (..., 3, H, W), recebido {tuple(lab.shape)}"
        )
    validate_finite(lab, "lab")
    lightness = lab[..., 0, :, :]
    if lightness.min() < 0 or lightness.max() > 100:
        raise DataValidationError("L deve estar em [0, 100]")

    x = lab.to(torch.float64)
    fy = (x[..., 0, :, :] + 16.0) / 116.0
    fx = fy + x[..., 1, :, :] / 500.0
    fz = fy - x[..., 2, :, :] / 200.0
    xyz = _lab_f_inv(torch.stack([fx, fy, fz], dim=-3)) * _expand_white(x)
    linear = _apply_matrix(_XYZ_TO_RGB, xyz)
    rgb = _linear_to_srgb(linear.clamp(0.0, 1.0))
    return rgb.clamp(0.0, 1.0).to(lab.dtype)


def normalized_l(img: torch.Tensor) -> torch.Tensor:
    """
    Canal L normalizado para [0, 1] (L / 100).

    Args:
        img: Tensor (..., 3, H, W) sRGB

    Returns:
        torch.Tensor: Tensor (..., 1, H, W)
    """
    return rgb_to_lab(img)[..., 0:1, :, :] / 100.0


def normalized_ab(img: torch.Tensor) -> torch.Tensor:
    """
    Canais a e b normalizados: (a + 128) / 255 e (b + 128) / 255.

    Args:
        img: Tensor (..., 3, H, W) sRGB

    Returns:
        torch.Tensor: Tensor (..., 2, H, W)
    """
    return (rgb_to_lab(img)[..., 1:3, :, :] + 128.0) / 255.0
