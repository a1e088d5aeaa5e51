"""
Utilitários de máscara compartilhados pelas perdas.
"""

import torch

from latent_camo.core.exceptions import DataValidationError, DegenerateRegionError
from latent_camo.utils.validators import validate_same_spatial


def as_batch_mask(m: torch.Tensor, batch: int) -> torch.Tensor:
    """Converte (H, W), (1, H, W) ou (B, 1, H, W) para (B, 1, H, W)."""
    if m.dim() == 2:
        m = m[None, None]
    elif m.dim() == 3:
        m = m.unsqueeze(0)
    if m.dim() != 4 or m.shape[1] != 1:
        raise DataValidationError(f"Máscara com formato inválido: {tuple(m.shape)}")
    if m.shape[0] == 1 and batch > 1:
        m = m.expand(batch, -1, -1, -1)
    if m.shape[0] != batch:
        raise DataValidationError(f"Lote da máscara ({m.shape[0]}) difere do lote da imagem ({batch})")
    return m


def as_batch_image(x: torch.Tensor) -> torch.Tensor:
    return x if x.dim() == 4 else x.unsqueeze(0)


def mask_area(m: torch.Tensor, name: str) -> torch.Tensor:
    """
    Σ m por exemplo do lote (B,).

    Raises:
        DegenerateRegionError: Se alguma máscara estiver vazia
    """
    area = m.flatten(start_dim=1).sum(dim=1)
    if (area <= 0).any():
        raise DegenerateRegionError(f"{name} vazia: denominador zero")
    return area


def masked_mean_square(a: torch.Tensor, b: torch.Tensor, m: torch.Tensor, name: str) -> torch.Tensor:
    """(1/Σm) · ‖a ⊙ m − b ⊙ m‖² por exemplo, média no lote."""
    a, b = as_batch_image(a), as_batch_image(b)
    validate_same_spatial(a, m, f"imagem e {name}")
    m = as_batch_mask(m, a.shape[0]).to(a.dtype)
    area = mask_area(m, name)
    sq = ((a * m - b * m) ** 2).flatten(start_dim=1).sum(dim=1)
    return (sq / area).mean()
