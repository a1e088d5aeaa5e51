"""
Texturas procedurais de fundo, de conceitos e de veículos.

Cada textura é uma função `(rng, size) -> array (size, size, 3)` em [0, 1],
determinística dado o estado do `numpy.random.Generator`.
"""

from typing import Callable, Dict, List, Tuple

import numpy as np
from PIL import Image

from latent_camo.core.exceptions import DataValidationError

TextureFn = Callable[[np.random.Generator, int], np.ndarray]

RGB = Tuple[float, float, float]

VEHICLE_PAINTS: List[RGB] = [
    (0.80, 0.10, 0.10),  # vermelho
    (0.95, 0.82, 0.10),  # amarelo
    (0.95, 0.95, 0.95),  # branco
    (0.08, 0.08, 0.10),  # preto
    (0.10, 0.25, 0.80),  # azul
    (0.62, 0.62, 0.68),  # prata
]


def smooth_noise(rng: np.random.Generator, size: int, cells: int) -> np.ndarray:
    """
    Ruído suave em [0, 1]: grade aleatória `cells × cells` ampliada por interpolação bicúbica.

    Returns:
        np.ndarray: Array (size, size) float64
    """
    low = rng.random((cells, cells)).astype(np.float32)
    field = Image.fromarray(low).resize((size, size), Image.Resampling.BICUBIC)
    return np.clip(np.asarray(field, dtype=np.float64), 0.0, 1.0)


def _fill(size: int, color: RGB) -> np.ndarray:
    return np.broadcast_to(np.asarray(color, dtype=np.float64), (size, size, 3)).copy()


def _modulate(img: np.ndarray, field: np.ndarray, amplitude: float) -> np.ndarray:
    return img + amplitude * (field[..., None] - 0.5)


def _grain(rng: np.random.Generator, img: np.ndarray, amplitude: float) -> np.ndarray:
    return img + amplitude * (rng.random(img.shape[:2])[..., None] - 0.5)


def _finish(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Famílias de fundo por cena
# ---------------------------------------------------------------------------


def urban_blocks(rng: np.random.Generator, size: int) -> np.ndarray:
    """Quarteirões em tons de cinza/marrom separados por ruas escuras."""
    img = _fill(size, (0.25, 0.25, 0.27))
    step = int(rng.integers(10, 17))
    offset_y, offset_x = rng.integers(0, step, size=2)
    for top in range(-int(offset_y), size, step):
        for left in range(-int(offset_x), size, step):
            shade = rng.uniform(0.45, 0.75)
            warm = rng.uniform(0.0, 0.12)
            y0, x0 = max(top + 1, 0), max(left + 1, 0)
            y1, x1 = min(top + step - 1, size), min(left + step - 1, size)
            if y1 > y0 and x1 > x0:
                img[y0:y1, x0:x1] = (shade + warm, shade, shade - warm)
    return _finish(_grain(rng, img, 0.06))


def urban_facades(rng: np.random.Generator, size: int) -> np.ndarray:
    """Fachadas bege com grade regular de janelas escuras."""
    img = _modulate(_fill(size, (0.78, 0.72, 0.62)), smooth_noise(rng, size, 4), 0.15)
    pitch = int(rng.integers(5, 8))
    yy, xx = np.mgrid[0:size, 0:size]
    phase_y, phase_x = rng.integers(0, pitch, size=2)
    windows = ((yy + phase_y) % pitch < 2) & ((xx + phase_x) % pitch < 3)
    img[windows] = (0.20, 0.24, 0.30)
    return _finish(_grain(rng, img, 0.04))


def rural_meadow(rng: np.random.Generator, size: int) -> np.ndarray:
    """Campo verde com variação suave e granulação fina."""
    img = _modulate(_fill(size, (0.30, 0.55, 0.20)), smooth_noise(rng, size, 6), 0.25)
    return _finish(_grain(rng, img, 0.10))


def rural_fields(rng: np.random.Generator, size: int) -> np.ndarray:
    """Faixas de plantação alternando verde e amarelo-esverdeado."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    angle = rng.uniform(0, np.pi)
    period = rng.uniform(6.0, 12.0)
    proj = np.cos(angle) * xx + np.sin(angle) * yy
    stripes = (np.floor(proj / period) % 2).astype(bool)
    img = np.where(stripes[..., None], np.array([0.45, 0.62, 0.22]), np.array([0.70, 0.66, 0.30]))
    return _finish(_grain(rng, img, 0.08))


def road_asphalt(rng: np.random.Generator, size: int) -> np.ndarray:
    """Asfalto cinza escuro com faixas tracejadas brancas."""
    img = _modulate(_fill(size, (0.33, 0.33, 0.35)), smooth_noise(rng, size, 8), 0.08)
    img = _grain(rng, img, 0.08)
    horizontal = bool(rng.integers(0, 2))
    dash = int(rng.integers(5, 9))
    for lane in (size // 3, 2 * size // 3):
        for start in range(0, size, 2 * dash):
            if horizontal:
                img[lane - 1 : lane + 1, start : start + dash] = (0.92, 0.92, 0.88)
            else:
                img[start : start + dash, lane - 1 : lane + 1] = (0.92, 0.92, 0.88)
    return _finish(img)


def road_paving(rng: np.random.Generator, size: int) -> np.ndarray:
    """Calçamento de blocos desencontrados com rejunte escuro."""
    img = _fill(size, (0.50, 0.48, 0.45))
    brick_h, brick_w = int(rng.integers(4, 7)), int(rng.integers(7, 11))
    yy, xx = np.mgrid[0:size, 0:size]
    row = yy // brick_h
    shifted = xx + (row % 2) * (brick_w // 2)
    mortar = (yy % brick_h == 0) | (shifted % brick_w == 0)
    shades = rng.uniform(-0.08, 0.08, size=(size // brick_h + 2, size // brick_w + 3))
    img = img + shades[row, shifted // brick_w][..., None]
    img[mortar] = (0.28, 0.27, 0.26)
    return _finish(_grain(rng, img, 0.04))


def sky_clear(rng: np.random.Generator, size: int) -> np.ndarray:
    """Céu azul com gradiente vertical."""
    t = np.linspace(0.0, 1.0, size)[:, None, None]
    top = np.array([0.35, 0.55, 0.90])
    bottom = np.array([0.68, 0.80, 0.98])
    img = np.broadcast_to(top + (bottom - top) * t, (size, size, 3)).copy()
    img = _modulate(img, smooth_noise(rng, size, 3), 0.06)
    return _finish(_grain(rng, img, 0.02))


def sky_cloudy(rng: np.random.Generator, size: int) -> np.ndarray:
    """Céu azul com nuvens brancas difusas."""
    base = _fill(size, (0.45, 0.62, 0.92))
    cover = np.clip((smooth_noise(rng, size, 5) - 0.45) * 3.0, 0.0, 1.0)[..., None]
    img = base * (1 - cover) + np.array([0.96, 0.96, 0.98]) * cover
    return _finish(_grain(rng, img, 0.03))


def lake_ripples(rng: np.random.Generator, size: int) -> np.ndarray:
    """Água azul com ondulações senoidais."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    freq = rng.uniform(0.3, 0.6)
    phase = rng.uniform(0, 2 * np.pi)
    waves = 0.5 + 0.5 * np.sin(freq * yy + 0.3 * np.sin(0.2 * xx) + phase)
    img = _modulate(_fill(size, (0.15, 0.35, 0.58)), waves, 0.18)
    return _finish(_grain(rng, img, 0.04))


def lake_murky(rng: np.random.Generator, size: int) -> np.ndarray:
    """Água verde-azulada turva."""
    img = _modulate(_fill(size, (0.20, 0.42, 0.38)), smooth_noise(rng, size, 5), 0.20)
    return _finish(_grain(rng, img, 0.06))


# ---------------------------------------------------------------------------
# Conceitos da estratégia de nível de cena
# ---------------------------------------------------------------------------


def concept_building(rng: np.random.Generator, size: int) -> np.ndarray:
    """Telhados/fachadas de tijolo avermelhado."""
    img = _modulate(_fill(size, (0.62, 0.32, 0.24)), smooth_noise(rng, size, 4), 0.12)
    yy = np.arange(size)[:, None]
    img[np.broadcast_to(yy % 4 == 0, (size, size))] = (0.45, 0.22, 0.18)
    return _finish(_grain(rng, img, 0.05))


def concept_tree(rng: np.random.Generator, size: int) -> np.ndarray:
    """Copas de árvores: manchas verde-escuras de alta frequência."""
    canopy = smooth_noise(rng, size, 12)
    img = np.where(
        (canopy > 0.5)[..., None],
        np.array([0.12, 0.38, 0.12]),
        np.array([0.06, 0.24, 0.08]),
    )
    img = _modulate(img, canopy, 0.15)
    return _finish(_grain(rng, img, 0.06))


def concept_platform(rng: np.random.Generator, size: int) -> np.ndarray:
    """Plataforma de concreto com juntas em grade."""
    img = _modulate(_fill(size, (0.70, 0.70, 0.68)), smooth_noise(rng, size, 3), 0.06)
    yy, xx = np.mgrid[0:size, 0:size]
    pitch = int(rng.integers(8, 13))
    img[(yy % pitch == 0) | (xx % pitch == 0)] = (0.52, 0.52, 0.50)
    return _finish(_grain(rng, img, 0.03))


def concept_cloud(rng: np.random.Generator, size: int) -> np.ndarray:
    """Nuvem branco-acinzentada volumosa."""
    img = _modulate(_fill(size, (0.88, 0.89, 0.92)), smooth_noise(rng, size, 6), 0.22)
    return _finish(_grain(rng, img, 0.02))


def concept_beach(rng: np.random.Generator, size: int) -> np.ndarray:
    """Areia clara com granulação."""
    img = _modulate(_fill(size, (0.86, 0.78, 0.55)), smooth_noise(rng, size, 5), 0.10)
    return _finish(_grain(rng, img, 0.10))


SCENE_TEXTURES: Dict[str, Dict[str, TextureFn]] = {
    "urban": {"blocks": urban_blocks, "facades": urban_facades},
    "rural": {"meadow": rural_meadow, "fields": rural_fields},
    "road": {"asphalt": road_asphalt, "paving": road_paving},
    "sky": {"clear": sky_clear, "cloudy": sky_cloudy},
    "lake": {"ripples": lake_ripples, "murky": lake_murky},
}

CONCEPT_TEXTURES: Dict[str, TextureFn] = {
    "building": concept_building,
    "grass": rural_meadow,
    "tree": concept_tree,
    "sky": sky_clear,
    "water": lake_ripples,
    "platform": concept_platform,
    "road": road_asphalt,
    "cloud": concept_cloud,
    "beach": concept_beach,
}


def texture_families(scene_label: str) -> List[str]:
    """Famílias de textura de uma cena (ordem estável)."""
    if scene_label not in SCENE_TEXTURES:
        raise DataValidationError(f"Cena desconhecida: {scene_label}")
    return list(SCENE_TEXTURES[scene_label])


def render_background(rng: np.random.Generator, scene_label: str, size: int) -> Tuple[np.ndarray, str]:
    """
    Sorteia uma família de textura da cena e renderiza o fundo.

    Returns:
        Tuple[np.ndarray, str]: Fundo (size, size, 3) e o nome da família
    """
    families = texture_families(scene_label)
    family = families[int(rng.integers(0, len(families)))]
    return SCENE_TEXTURES[scene_label][family](rng, size), family


def render_concept(rng: np.random.Generator, concept_name: str, size: int) -> np.ndarray:
    """Renderiza a textura procedural de um conceito."""
    if concept_name not in CONCEPT_TEXTURES:
        raise DataValidationError(f"Conceito sem textura: {concept_name}")
    return CONCEPT_TEXTURES[concept_name](rng, size)


def render_vehicle_layer(
    rng: np.random.Generator,
    size: int,
    x: int,
    y: int,
    w: int,
    h: int,
) -> np.ndarray:
    """
    Camada de pintura do veículo no quadro inteiro (a máscara recorta a carroceria).

    Pintura sólida com sombreamento, para-brisa escuro na frente e teto realçado.
    """
    paint = np.asarray(VEHICLE_PAINTS[int(rng.integers(0, len(VEHICLE_PAINTS)))])
    img = _fill(size, tuple(paint))
    img = _modulate(img, smooth_noise(rng, size, 3), 0.06)

    horizontal = w >= h
    if horizontal:
        front = x + int(0.65 * w)
        img[y + 2 : y + h - 2, front : front + max(w // 6, 2)] = (0.12, 0.16, 0.22)
        img[y + 3 : y + h - 3, x + w // 4 : front - 1] = np.clip(paint + 0.12, 0.0, 1.0)
    else:
        front = y + int(0.65 * h)
        img[front : front + max(h // 6, 2), x + 2 : x + w - 2] = (0.12, 0.16, 0.22)
        img[y + h // 4 : front - 1, x + 3 : x + w - 3] = np.clip(paint + 0.12, 0.0, 1.0)
    return _finish(_grain(rng, img, 0.03))
