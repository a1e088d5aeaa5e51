"""
Geração determinística do corpus sintético.

Cada registro é função apenas de (seed, scene_label, parâmetros): o gerador
numpy é semeado com `derive_seed(seed, scene_label, hash dos parâmetros)`.
"""

import json
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from latent_camo.core.exceptions import DataValidationError
from latent_camo.corpus.textures import (
    CONCEPT_TEXTURES,
    render_background,
    render_concept,
    render_vehicle_layer,
)
from latent_camo.domain.scene import Box, ConceptExemplar, SceneRecord, VehicleGeometry
from latent_camo.utils.config import (
    ALTERNATIVE_CONCEPT_MAP,
    MAIN_CONCEPT_MAP,
    CorpusConfig,
    config_hash,
)
from latent_camo.utils.logger import get_logger
from latent_camo.utils.reproducibility import derive_seed
from latent_camo.utils.tensors import quantize_image

logger = get_logger(__name__)

# Conceitos configurados por cena (pareamento principal e alternativo)
SCENE_CONCEPTS: Dict[str, Tuple[str, ...]] = {
    scene: (MAIN_CONCEPT_MAP[scene], ALTERNATIVE_CONCEPT_MAP[scene]) for scene in MAIN_CONCEPT_MAP
}

# Início de cada faixa de sementes; a semente da execução desloca todas as faixas
SPLIT_SEED_OFFSETS: Dict[str, int] = {
    "train": 0,
    "val": 1_000_000,
    "test": 2_000_000,
    "transfer": 3_000_000,
}
_RUN_SEED_STRIDE = 10_000_000


@dataclass
class SceneLayers:
    """Camadas que compõem uma cena antes da composição."""

    background: np.ndarray
    vehicle_layer: np.ndarray
    mask: np.ndarray
    geometry: VehicleGeometry
    texture_family: str


def _params_key(params: CorpusConfig) -> str:
    return config_hash(asdict(params))[:16]


def _rng(*parts: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))


def _validate_scene(scene_label: str, params: CorpusConfig) -> None:
    if scene_label not in params.scene_labels:
        raise DataValidationError(
            f"Cena não configurada: {scene_label}. Opções: {', '.join(params.scene_labels)}"
        )


def _sample_geometry(rng: np.random.Generator, params: CorpusConfig) -> VehicleGeometry:
    size = params.image_size
    w = int(rng.integers(params.vehicle_min_px, params.vehicle_max_px + 1))
    h = int(rng.integers(params.vehicle_min_px, params.vehicle_max_px + 1))
    radius = int(rng.integers(params.corner_radius_min, params.corner_radius_max + 1))
    margin = params.vehicle_margin_px
    x = int(rng.integers(margin, size - margin - w + 1))
    y = int(rng.integers(margin, size - margin - h + 1))
    return VehicleGeometry(x=x, y=y, w=w, h=h, radius=radius)


def render_scene_layers(seed: int, scene_label: str, params: CorpusConfig) -> SceneLayers:
    """
    Renderiza fundo, camada do veículo e máscara exata de uma cena.

    Raises:
        DataValidationError: Se a cena não estiver configurada
    """
    _validate_scene(scene_label, params)
    rng = _rng("scene", seed, scene_label, _params_key(params))
    size = params.image_size

    background, family = render_background(rng, scene_label, size)
    geometry = _sample_geometry(rng, params)
    vehicle_layer = render_vehicle_layer(rng, size, geometry.x, geometry.y, geometry.w, geometry.h)
    mask = geometry.rasterize(size, size)

    return SceneLayers(
        background=quantize_image(background),
        vehicle_layer=quantize_image(vehicle_layer),
        mask=mask,
        geometry=geometry,
        texture_family=family,
    )


def gen_scene(
    seed: int,
    scene_label: str,
    params: CorpusConfig,
    record_id: str = "",
    split: str = "train",
) -> SceneRecord:
    """
    Gera um registro de cena com um único veículo.

    Determinístico bit a bit por (seed, scene_label, params).

    Args:
        seed: Semente do registro
        scene_label: Tipo de cena configurado
        params: Parâmetros do gerador
        record_id: Identificador (padrão: derivado da cena e da semente)
        split: Partição a que o registro pertence

    Returns:
        SceneRecord: Imagem, máscara, caixa e metadados

    Raises:
        DataValidationError: Se a cena não estiver configurada
    """
    layers = render_scene_layers(seed, scene_label, params)
    m = layers.mask[..., None].astype(np.float32)
    image = (layers.vehicle_layer * m + layers.background * (1 - m)).astype(np.float32)

    return SceneRecord(
        record_id=record_id or f"{scene_label}_{seed}",
        image=image,
        vehicle_mask=layers.mask,
        box=Box.from_mask(layers.mask),
        scene_label=scene_label,
        objects=["vehicle", *SCENE_CONCEPTS[scene_label]],
        seed=seed,
        split=split,
        texture_family=layers.texture_family,
        geometry=layers.geometry.to_dict(),
    )


def gen_background(seed: int, scene_label: str, params: CorpusConfig) -> np.ndarray:
    """Fundo isolado (sem veículo) da cena, usado na avaliação de transferência."""
    return render_scene_layers(seed, scene_label, params).background


def gen_concept_exemplar(
    seed: int,
    scene_label: str,
    concept_name: str,
    params: Optional[CorpusConfig] = None,
    image_size: Optional[int] = None,
) -> ConceptExemplar:
    """
    Gera o exemplar procedural de um conceito: textura do conceito em uma
    região elíptica irregular sobre um fundo da cena.

    A máscara cobre ao menos 25% do quadro.

    Raises:
        DataValidationError: Se o par (cena, conceito) não estiver configurado
    """
    if concept_name not in SCENE_CONCEPTS.get(scene_label, ()):
        raise DataValidationError(
            f"Par cena/conceito não configurado: ({scene_label}, {concept_name})"
        )
    if concept_name not in CONCEPT_TEXTURES:
        raise DataValidationError(f"Conceito sem textura: {concept_name}")

    size = image_size or (params or CorpusConfig()).image_size
    rng = _rng("concept", seed, scene_label, concept_name, size)
    background, _ = render_background(rng, scene_label, size)
    texture = render_concept(rng, concept_name, size)

    # Elipse com contorno perturbado: semi-eixos mínimos garantem cobertura >= 25%
    semi_y = rng.uniform(0.34, 0.45) * size
    semi_x = rng.uniform(0.34, 0.45) * size
    phases = rng.uniform(0, 2 * np.pi, size=3)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) + 0.5
    dy, dx = (yy - size / 2) / semi_y, (xx - size / 2) / semi_x
    theta = np.arctan2(dy, dx)
    wobble = 1.0 + 0.08 * np.sin(3 * theta + phases[0]) * np.cos(2 * theta + phases[1])
    mask = (np.sqrt(dx**2 + dy**2) <= wobble).astype(np.uint8)

    m = mask[..., None].astype(np.float64)
    image = quantize_image(texture * m + background * (1 - m))
    return ConceptExemplar(
        image=image,
        concept_mask=mask,
        concept_name=concept_name,
        scene_label=scene_label,
        seed=seed,
    )


def split_seed_start(split: str, run_seed: int) -> int:
    """Primeira semente da faixa de uma partição."""
    if split not in SPLIT_SEED_OFFSETS:
        raise DataValidationError(f"Partição desconhecida: {split}")
    return run_seed * _RUN_SEED_STRIDE + SPLIT_SEED_OFFSETS[split]


def generate_split(params: CorpusConfig, split: str, run_seed: int = 0) -> List[SceneRecord]:
    """
    Gera uma partição completa; as cenas se alternam em ordem fixa.

    Args:
        params: Parâmetros do corpus
        split: "train", "val" ou "test"
        run_seed: Semente global da execução

    Returns:
        List[SceneRecord]: Registros na ordem de geração
    """
    count = {"train": params.train_size, "val": params.val_size, "test": params.test_size}.get(split)
    if count is None:
        raise DataValidationError(f"Partição desconhecida: {split}")
    start = split_seed_start(split, run_seed)
    labels = params.scene_labels
    records = [
        gen_scene(
            start + i,
            labels[i % len(labels)],
            params,
            record_id=f"{split}_{i:05d}",
            split=split,
        )
        for i in range(count)
    ]
    logger.info(f"Partição '{split}' gerada: {len(records)} registros")
    return records


def corpus_manifest(params: CorpusConfig, run_seed: int) -> Dict[str, object]:
    """Definição das partições e parâmetros do gerador (conteúdo de manifest.json)."""
    sizes = {"train": params.train_size, "val": params.val_size, "test": params.test_size}
    return {
        "splits": {
            name: {"seed_start": split_seed_start(name, run_seed), "count": count}
            for name, count in sizes.items()
        },
        "generator_params": json.loads(json.dumps(asdict(params))),
        "run_seed": run_seed,
    }
