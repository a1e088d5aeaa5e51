"""Operações de imagem: espaço de cor CIELAB e álgebra de máscaras."""

from latent_camo.imaging.colorspace import lab_to_rgb, normalized_ab, normalized_l, rgb_to_lab
from latent_camo.imaging.maskops import annulus, binarize, composite, dilate, downsample_mask

__all__ = [
    "rgb_to_lab",
    "lab_to_rgb",
    "normalized_l",
    "normalized_ab",
    "dilate",
    "annulus",
    "downsample_mask",
    "binarize",
    "composite",
]
