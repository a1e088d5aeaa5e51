"""
Referência de estilo (x_s, m_s) e pacote de condicionamento por imagem.

- image_level: anel dilatado ao redor do veículo na própria imagem
- scene_level: exemplar procedural do conceito associado à cena, compartilhado
  por todas as imagens da mesma cena
"""

from typing import Tuple

import torch

from latent_camo.backend.conditioning import Conditioning
from latent_camo.core.exceptions import DataValidationError, DegenerateRegionError
from latent_camo.corpus.generator import gen_concept_exemplar
from latent_camo.domain.scene import ConceptExemplar, SceneRecord
from latent_camo.imaging.colorspace import normalized_l
from latent_camo.imaging.maskops import annulus
from latent_camo.utils.cache import LRUCache
from latent_camo.utils.config import StrategyConfig

# Exemplares por (cena, conceito, semente, tamanho)
_EXEMPLAR_CACHE = LRUCache(maxsize=64)


def concept_exemplar(scene_label: str, cfg: StrategyConfig, image_size: int) -> ConceptExemplar:
    """
    Exemplar do conceito mapeado para a cena (em cache).

    Raises:
        DataValidationError: Cena sem conceito no mapa
    """
    if scene_label not in cfg.scene_concept_map:
        raise DataValidationError(f"Cena sem conceito mapeado: {scene_label}")
    concept = cfg.scene_concept_map[scene_label]
    key = (scene_label, concept, cfg.exemplar_seed, image_size)
    return _EXEMPLAR_CACHE.get_or_compute(
        key,
        lambda: gen_concept_exemplar(cfg.exemplar_seed, scene_label, concept, image_size=image_size),
    )


def select_reference(record: SceneRecord, cfg: StrategyConfig) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Seleciona a imagem e a máscara de referência de estilo.

    Args:
        record: Registro da cena
        cfg: Estratégia

    Returns:
        (x_s (3, H, W), m_s (1, H, W))

    Raises:
        DegenerateRegionError: Anel vazio (veículo ocupa o quadro ou kernel 1)
        DataValidationError: Cena sem conceito mapeado
    """
    if cfg.is_scene_level:
        exemplar = concept_exemplar(record.scene_label, cfg, record.size[0])
        return exemplar.image_tensor(), exemplar.mask_tensor()

    mask = record.mask_tensor()
    ring = annulus(mask, cfg.dilation_kernel_px)
    if not (ring > 0).any():
        raise DegenerateRegionError(
            f"Anel de referência vazio no registro '{record.record_id}' (kernel {cfg.dilation_kernel_px})"
        )
    return record.image_tensor(), ring


def build_conditioning(record: SceneRecord, cfg: StrategyConfig) -> Conditioning:
    """
    Condicionamento do denoiser para um registro.

    l_channel = L normalizado da imagem; ref_area = x_s ⊙ m_s; máscara do veículo;
    fundo = imagem ⊙ (1 − m) apenas na estratégia de nível de imagem.
    """
    x_s, m_s = select_reference(record, cfg)
    image = record.image_tensor()
    mask = record.mask_tensor()
    return Conditioning(
        l_channel=normalized_l(image),
        ref_area=x_s * m_s,
        vehicle_mask=mask,
        background=None if cfg.is_scene_level else image * (1 - mask),
    )


__all__ = [
    "concept_exemplar",
    "select_reference",
    "build_conditioning",
]
