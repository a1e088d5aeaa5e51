"""
Conversões entre arrays numpy (HWC, como persistidos no corpus) e tensores
torch (CHW, como consumidos pelos modelos).
"""

from typing import Optional, Sequence

import numpy as np
import torch


def image_to_tensor(image: np.ndarray, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Converte imagem HWC em [0, 1] para tensor (3, H, W)."""
    return torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1))).to(dtype)


def mask_to_tensor(mask: np.ndarray, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Converte máscara HW em {0, 1} para tensor (1, H, W)."""
    return torch.from_numpy(np.ascontiguousarray(mask)).to(dtype).unsqueeze(0)


def tensor_to_image(tensor: torch.Tensor) -> np.ndarray:
    """Converte tensor (3, H, W) para array HWC float32."""
    return tensor.detach().cpu().to(torch.float32).numpy().transpose(1, 2, 0).copy()


def to_uint8(image: np.ndarray) -> np.ndarray:
    """Converte valores em [0, 1] para a grade de 8 bits."""
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def from_uint8(array: np.ndarray) -> np.ndarray:
    """Converte 8 bits para float32 k/255 (mesma aritmética de `quantize_image`)."""
    return (array.astype(np.float64) / 255.0).astype(np.float32)


def quantize_image(image: np.ndarray) -> np.ndarray:
    """Quantiza uma imagem em [0, 1] para a grade de 8 bits (k/255), em float32."""
    return from_uint8(to_uint8(image))


def batch_of(tensors: Sequence[torch.Tensor], device: Optional[torch.device] = None) -> torch.Tensor:
    """Empilha tensores sem dimensão de lote em um lote (B, ...)."""
    stacked = torch.stack(list(tensors), dim=0)
    return stacked.to(device) if device is not None else stacked
