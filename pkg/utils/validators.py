"""
Validações de dados do sistema.

Este módulo contém funções de validação para garantir integridade dos tensores
(imagens, máscaras, latentes) que circulam entre os módulos.
"""

import torch

from latent_camo.core.exceptions import DataValidationError, DegenerateRegionError


def validate_finite(tensor: torch.Tensor, name: str) -> None:
    """
    Valida que um tensor não contém NaN/Inf.

    Raises:
        DataValidationError: Se houver valores não finitos
    """
    if not torch.isfinite(tensor).all():
        raise DataValidationError(f"{name} contém valores não finitos (NaN/Inf)")


def validate_rgb_image(img: torch.Tensor, name: str = "imagem") -> None:
    """
    Valida uma imagem RGB no formato (..., 3, H, W) com valores em [0, 1].

    Args:
        img: Tensor da imagem
        name: Nome do argumento (para a mensagem de erro)

    Raises:
        DataValidationError: Se formato ou valores forem inválidos
    """
    if not isinstance(img, torch.Tensor):
        raise DataValidationError(f"{name} deve ser um torch.Tensor")
    if img.dim() < 3 or img.shape[-3] != 3:
        raise DataValidationError(
            f"{name} deve ter formato (..., 3, H, W), recebido {tuple(img.shape)}"
        )
    if img.shape[-1] < 1 or img.shape[-2] < 1:
        raise DataValidationError(f"{name} deve ter H >= 1 e W >= 1")
    validate_finite(img, name)
    if img.min() < 0 or img.max() > 1:
        raise DataValidationError(f"{name} deve ter valores em [0, 1]")


def validate_binary_mask(mask: torch.Tensor, name: str = "máscara") -> None:
    """
    Valida que a máscara contém apenas 0 e 1.

    Raises:
        DataValidationError: Se houver valores fora de {0, 1}
    """
    if not isinstance(mask, torch.Tensor):
        raise DataValidationError(f"{name} deve ser um torch.Tensor")
    if mask.dim() < 2:
        raise DataValidationError(f"{name} deve ter ao menos 2 dimensões (H, W)")
    if not ((mask == 0) | (mask == 1)).all():
        raise DataValidationError(f"{name} deve conter apenas 0 e 1")


def validate_same_spatial(a: torch.Tensor, b: torch.Tensor, names: str) -> None:
    """Valida que dois tensores têm a mesma resolução espacial (H, W)."""
    if a.shape[-2:] != b.shape[-2:]:
        raise DataValidationError(
            f"Resolução incompatível entre {names}: "
            f"{tuple(a.shape[-2:])} vs {tuple(b.shape[-2:])}"
        )


def validate_nonempty_mask(mask: torch.Tensor, name: str = "máscara") -> None:
    """
    Valida que cada máscara do lote tem ao menos um pixel ativo.

    Aceita (H, W), (1, H, W) ou (B, 1, H, W).

    Raises:
        DegenerateRegionError: Se alguma máscara estiver vazia
    """
    flat = mask.reshape(-1, mask.shape[-2] * mask.shape[-1])
    if (flat.sum(dim=-1) <= 0).any():
        raise DegenerateRegionError(f"{name} vazia: a região selecionada não tem pixels")


def validate_odd_kernel(kernel_px: int) -> None:
    """Valida tamanho de kernel de dilatação (ímpar e positivo)."""
    if not isinstance(kernel_px, int) or isinstance(kernel_px, bool):
        raise DataValidationError(f"kernel_px deve ser inteiro, recebido {kernel_px!r}")
    if kernel_px < 1 or kernel_px % 2 == 0:
        raise DataValidationError(
            f"kernel_px deve ser ímpar e positivo, recebido {kernel_px}"
        )
