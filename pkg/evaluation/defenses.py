"""
Defesas de pré-processamento aplicadas às imagens compostas antes da detecção.

- none: identidade
- nlm: Non-local Means do scikit-image
- bilateral: filtro bilateral do scikit-image
"""

from typing import Optional

import numpy as np
from skimage.restoration import denoise_bilateral, denoise_nl_means

from latent_camo.core.exceptions import DataValidationError
from latent_camo.core.interfaces import ImageDefense
from latent_camo.evaluation.metrics import as_hwc
from latent_camo.utils.config import EvalConfig
from latent_camo.utils.validators import validate_odd_kernel

DEFENSES = ("none", "nlm", "bilateral")


def nl_means(image: np.ndarray, patch_size: int = 3, search_window: int = 7, h: float = 0.1) -> np.ndarray:
    """
    Non-local Means do scikit-image (modo rápido, canais conjuntos).

    Args:
        image: (H, W, 3) em [0, 1]
        patch_size: Lado do patch (ímpar)
        search_window: Lado da janela de busca (ímpar); distância máxima = search_window // 2
        h: Intensidade do filtro

    Returns:
        np.ndarray: (H, W, 3) float64 em [0, 1]
    """
    validate_odd_kernel(patch_size)
    validate_odd_kernel(search_window)
    if h <= 0:
        raise DataValidationError(f"h deve ser positivo, recebido {h}")
    img = as_hwc(image)
    height, width = img.shape[:2]
    if patch_size // 2 + search_window // 2 >= min(height, width):
        raise DataValidationError(
            f"Imagem {height}×{width} pequena demais para patch {patch_size} e busca {search_window}"
        )
    filtered = denoise_nl_means(
        img,
        patch_size=patch_size,
        patch_distance=search_window // 2,
        h=h,
        fast_mode=True,
        channel_axis=-1,
    )
    return np.clip(filtered, 0.0, 1.0)


class NoDefense(ImageDefense):
    """Identidade."""

    name = "none"

    def apply(self, image: np.ndarray) -> np.ndarray:
        return as_hwc(image)


class NonLocalMeansDefense(ImageDefense):
    name = "nlm"

    def __init__(self, patch_size: int = 3, search_window: int = 7, h: float = 0.1):
        self.patch_size = patch_size
        self.search_window = search_window
        self.h = h

    def apply(self, image: np.ndarray) -> np.ndarray:
        return nl_means(image, self.patch_size, self.search_window, self.h)


class BilateralDefense(ImageDefense):
    name = "bilateral"

    def __init__(self, sigma_spatial: float = 2.0, sigma_color: float = 0.1):
        self.sigma_spatial = sigma_spatial
        self.sigma_color = sigma_color

    def apply(self, image: np.ndarray) -> np.ndarray:
        filtered = denoise_bilateral(
            as_hwc(image),
            sigma_color=self.sigma_color,
            sigma_spatial=self.sigma_spatial,
            channel_axis=-1,
            mode="reflect",
        )
        return np.clip(filtered, 0.0, 1.0)


def get_defense(name: str, config: Optional[EvalConfig] = None) -> ImageDefense:
    """
    Cria a defesa pelo nome com os parâmetros da avaliação.

    Raises:
        DataValidationError: Defesa desconhecida
    """
    config = config or EvalConfig()
    if name == "none":
        return NoDefense()
    if name == "nlm":
        return NonLocalMeansDefense(config.nlm_patch_size, config.nlm_search_window, config.nlm_h)
    if name == "bilateral":
        return BilateralDefense(config.bilateral_sigma_spatial, config.bilateral_sigma_color)
    raise DataValidationError(f"Defesa desconhecida: {name}. Opções: {', '.join(DEFENSES)}")
