"""Corpus sintético: texturas procedurais, geração determinística e persistência."""

from latent_camo.corpus.generator import (
    gen_background,
    gen_concept_exemplar,
    gen_scene,
    generate_split,
    render_scene_layers,
)
from latent_camo.corpus.storage import read_corpus, write_corpus

__all__ = [
    "gen_scene",
    "gen_background",
    "gen_concept_exemplar",
    "generate_split",
    "render_scene_layers",
    "read_corpus",
    "write_corpus",
]
