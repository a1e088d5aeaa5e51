"""Testes do gerador e da persistência do corpus sintético."""

import json

import numpy as np
import pytest
import torch

from latent_camo.core.exceptions import CorpusLoadError, DataValidationError
from latent_camo.corpus.generator import (
    corpus_manifest,
    gen_background,
    gen_concept_exemplar,
    gen_scene,
    generate_split,
    render_scene_layers,
)
from latent_camo.corpus.storage import manifest_hash, read_corpus, write_corpus
from latent_camo.corpus.textures import texture_families
from latent_camo.imaging.colorspace import normalized_ab
from latent_camo.utils.config import SCENE_LABELS, CorpusConfig


def _rounded_rect_count(geometry: dict, size: int) -> int:
    """Conta pixels cujo centro cai no retângulo de cantos arredondados."""
    x, y, w, h, r = (geometry[k] for k in ("x", "y", "w", "h", "radius"))
    count = 0
    for i in range(size):
        for j in range(size):
            px, py = j + 0.5, i + 0.5
            if not (x <= px < x + w and y <= py < y + h):
                continue
            cx = min(max(px, x + r), x + w - r)
            cy = min(max(py, y + r), y + h - r)
            if (px - cx) ** 2 + (py - cy) ** 2 <= r * r:
                count += 1
    return count


class TestGenScene:
    def test_deterministic(self, corpus_config):
        a = gen_scene(7, "road", corpus_config)
        b = gen_scene(7, "road", corpus_config)
        assert a.image.tobytes() == b.image.tobytes()
        assert a.vehicle_mask.tobytes() == b.vehicle_mask.tobytes()
        assert a.metadata() == b.metadata()

    def test_different_seeds_differ(self, corpus_config):
        first, second = gen_scene(1, "urban", corpus_config), gen_scene(2, "urban", corpus_config)
        assert not np.array_equal(first.image, second.image)

    @pytest.mark.parametrize("seed", [0, 3, 11])
    @pytest.mark.parametrize("scene", SCENE_LABELS)
    def test_mask_matches_rasterizer(self, corpus_config, seed, scene):
        record = gen_scene(seed, scene, corpus_config)
        assert int(record.vehicle_mask.sum()) == _rounded_rect_count(record.geometry, corpus_config.image_size)

    def test_mask_tight_inside_box(self, corpus_config):
        record = gen_scene(5, "lake", corpus_config)
        box = record.box
        inside = record.vehicle_mask[box.y : box.y + box.h, box.x : box.x + box.w]
        assert inside.sum() == record.vehicle_mask.sum()
        assert inside[0].any() and inside[-1].any() and inside[:, 0].any() and inside[:, -1].any()
        assert box.area >= 16

    def test_composite_of_layers_reproduces_image(self, corpus_config):
        layers = render_scene_layers(9, "rural", corpus_config)
        record = gen_scene(9, "rural", corpus_config)
        m = layers.mask[..., None].astype(bool)
        expected = np.where(m, layers.vehicle_layer, layers.background)
        np.testing.assert_array_equal(record.image, expected.astype(np.float32))

    def test_background_has_no_vehicle_but_matches_outside(self, corpus_config):
        record = gen_scene(4, "sky", corpus_config)
        background = gen_background(4, "sky", corpus_config)
        outside = record.vehicle_mask == 0
        np.testing.assert_array_equal(record.image[outside], background[outside].astype(np.float32))

    def test_prompt_and_objects(self, corpus_config):
        record = gen_scene(1, "urban", corpus_config)
        assert record.objects[0] == "vehicle"
        assert record.prompt.startswith("an image of urban area with vehicle")

    def test_unknown_scene(self, corpus_config):
        with pytest.raises(DataValidationError):
            gen_scene(0, "desert", corpus_config)

    def test_scene_outside_configuration(self):
        params = CorpusConfig(image_size=32, scene_labels=("road",), vehicle_min_px=10, vehicle_max_px=14,
                              corner_radius_min=1, corner_radius_max=2, vehicle_margin_px=4)
        with pytest.raises(DataValidationError):
            gen_scene(0, "urban", params)


class TestTextureFamilies:
    @pytest.mark.parametrize("scene", SCENE_LABELS)
    def test_at_least_two_families(self, scene):
        assert len(texture_families(scene)) >= 2


class TestConceptExemplar:
    def test_grass_is_green(self):
        exemplar = gen_concept_exemplar(3, "rural", "grass", image_size=32)
        ab = normalized_ab(exemplar.image_tensor())
        concept = exemplar.mask_tensor()[0].bool()
        # verde: a < 0
        assert ab[0][concept].mean().item() < 128.0 / 255.0

    def test_deterministic_and_covers_quarter(self):
        a = gen_concept_exemplar(5, "lake", "water", image_size=32)
        b = gen_concept_exemplar(5, "lake", "water", image_size=32)
        assert np.array_equal(a.image, b.image)
        assert np.array_equal(a.concept_mask, b.concept_mask)
        assert a.concept_mask.mean() >= 0.25

    def test_unconfigured_pair(self):
        with pytest.raises(DataValidationError):
            gen_concept_exemplar(0, "sky", "building")


class TestSplits:
    def test_disjoint_seed_ranges(self, corpus_config):
        train = generate_split(corpus_config, "train", run_seed=0)
        test = generate_split(corpus_config, "test", run_seed=0)
        assert {r.seed for r in train}.isdisjoint({r.seed for r in test})
        assert [r.record_id for r in train] == [f"train_{i:05d}" for i in range(corpus_config.train_size)]

    def test_reproducible_from_config(self, corpus_config):
        a = generate_split(corpus_config, "val", run_seed=2)
        b = generate_split(corpus_config, "val", run_seed=2)
        assert all(np.array_equal(x.image, y.image) for x, y in zip(a, b))

    def test_scenes_alternate(self, corpus_config):
        records = generate_split(corpus_config, "train")
        labels = corpus_config.scene_labels
        assert [r.scene_label for r in records] == [labels[i % len(labels)] for i in range(len(records))]

    def test_unknown_split(self, corpus_config):
        with pytest.raises(DataValidationError):
            generate_split(corpus_config, "holdout")


class TestStorage:
    def test_round_trip(self, corpus_config, tmp_path):
        records = generate_split(corpus_config, "train") + generate_split(corpus_config, "test")
        write_corpus(records, tmp_path / "corpus", manifest=corpus_manifest(corpus_config, 0))
        loaded = read_corpus(tmp_path / "corpus")
        assert [r.record_id for r in loaded] == [r.record_id for r in records]
        for original, back in zip(records, loaded):
            assert original.image.tobytes() == back.image.tobytes()
            assert original.vehicle_mask.tobytes() == back.vehicle_mask.tobytes()
            assert original.metadata() == back.metadata()

    def test_split_filter(self, corpus_config, tmp_path):
        records = generate_split(corpus_config, "train") + generate_split(corpus_config, "val")
        write_corpus(records, tmp_path)
        assert {r.split for r in read_corpus(tmp_path, "val")} == {"val"}

    def test_manifest_contents(self, corpus_config, tmp_path):
        write_corpus(generate_split(corpus_config, "test"), tmp_path, manifest=corpus_manifest(corpus_config, 3))
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["format_version"] == 1
        assert manifest["run_seed"] == 3
        assert manifest["splits"]["test"]["count"] == corpus_config.test_size
        assert len(manifest_hash(tmp_path)) == 64

    def test_empty_directory(self, tmp_path):
        assert read_corpus(tmp_path) == []
        assert read_corpus(tmp_path / "missing") == []

    def test_tampered_image_names_record(self, corpus_config, tmp_path):
        records = generate_split(corpus_config, "test")
        write_corpus(records, tmp_path)
        target = tmp_path / "images" / f"{records[1].record_id}.png"
        data = bytearray(target.read_bytes())
        data[-20] ^= 0xFF
        target.write_bytes(bytes(data))
        with pytest.raises(CorpusLoadError, match=records[1].record_id):
            read_corpus(tmp_path)

    def test_missing_mask_names_path(self, corpus_config, tmp_path):
        records = generate_split(corpus_config, "test")
        write_corpus(records, tmp_path)
        (tmp_path / "masks" / f"{records[0].record_id}.png").unlink()
        with pytest.raises(CorpusLoadError, match="masks"):
            read_corpus(tmp_path)

    def test_tensor_views(self, corpus_config):
        record = gen_scene(0, "road", corpus_config)
        assert record.image_tensor().shape == (3, 32, 32)
        assert record.mask_tensor(torch.float64).dtype == torch.float64
