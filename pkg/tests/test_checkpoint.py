"""Testes da persistência de checkpoints, sementes e layout do diretório de trabalho."""

import json

import pytest
import torch
from torch import nn

from latent_camo.core.exceptions import InvalidConfigurationError, NotReadyError
from latent_camo.utils.checkpoint import (
    MANIFEST_NAME,
    checkpoint_hash,
    load_checkpoint,
    parameter_hash,
    restore_module,
    save_checkpoint,
)
from latent_camo.utils.reproducibility import derive_seed, seed_everything
from latent_camo.utils.workspace import WorkspaceLayout


def _module(seed: int = 0) -> nn.Module:
    torch.manual_seed(seed)
    return nn.Sequential(nn.Conv2d(3, 4, 3), nn.BatchNorm2d(4))


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        source = _module(0)
        save_checkpoint(tmp_path / "ckpt", source.state_dict(), "critic", "abc", {"width": 4}, {"step": 7})
        checkpoint = load_checkpoint(tmp_path / "ckpt", expected_kind="critic")
        assert checkpoint.config_hash == "abc"
        assert checkpoint.model_config == {"width": 4}
        assert checkpoint.metadata == {"step": 7}
        target = restore_module(_module(1), checkpoint)
        assert parameter_hash(target) == parameter_hash(source)

    def test_float64_stored_as_float32(self, tmp_path):
        state = {"w": torch.tensor([0.1, 0.2], dtype=torch.float64)}
        save_checkpoint(tmp_path / "ckpt", state, "critic", "")
        loaded = load_checkpoint(tmp_path / "ckpt").tensors["w"]
        assert loaded.dtype == torch.float32
        torch.testing.assert_close(loaded, state["w"].float())

    def test_manifest_contents(self, tmp_path):
        save_checkpoint(tmp_path / "ckpt", _module().state_dict(), "critic", "abc")
        manifest = json.loads((tmp_path / "ckpt" / MANIFEST_NAME).read_text())
        assert manifest["kind"] == "critic"
        assert [e["dtype"] for e in manifest["tensors"]] == ["float32"] * len(manifest["tensors"])
        assert all((tmp_path / "ckpt" / e["file"]).exists() for e in manifest["tensors"])

    def test_missing_directory(self, tmp_path):
        with pytest.raises(NotReadyError):
            load_checkpoint(tmp_path / "nothing")

    def test_wrong_kind(self, tmp_path):
        save_checkpoint(tmp_path / "ckpt", _module().state_dict(), "critic", "")
        with pytest.raises(NotReadyError):
            load_checkpoint(tmp_path / "ckpt", expected_kind="detector")

    def test_truncated_blob(self, tmp_path):
        save_checkpoint(tmp_path / "ckpt", _module().state_dict(), "critic", "")
        blob = tmp_path / "ckpt" / "tensors" / "0000.bin"
        blob.write_bytes(blob.read_bytes()[:-4])
        with pytest.raises(NotReadyError):
            load_checkpoint(tmp_path / "ckpt")

    def test_corrupt_manifest(self, tmp_path):
        save_checkpoint(tmp_path / "ckpt", _module().state_dict(), "critic", "")
        (tmp_path / "ckpt" / MANIFEST_NAME).write_text("{", encoding="utf-8")
        with pytest.raises(NotReadyError):
            load_checkpoint(tmp_path / "ckpt")

    def test_incompatible_module(self, tmp_path):
        save_checkpoint(tmp_path / "ckpt", _module().state_dict(), "critic", "")
        with pytest.raises(NotReadyError):
            restore_module(nn.Sequential(nn.Conv2d(3, 8, 3), nn.BatchNorm2d(8)), load_checkpoint(tmp_path / "ckpt"))

    def test_checkpoint_hash(self, tmp_path):
        save_checkpoint(tmp_path / "a", _module(0).state_dict(), "critic", "")
        save_checkpoint(tmp_path / "b", _module(0).state_dict(), "critic", "")
        save_checkpoint(tmp_path / "c", _module(1).state_dict(), "critic", "")
        assert checkpoint_hash(tmp_path / "a") == checkpoint_hash(tmp_path / "b")
        assert checkpoint_hash(tmp_path / "a") != checkpoint_hash(tmp_path / "c")
        with pytest.raises(NotReadyError):
            checkpoint_hash(tmp_path / "d")

    def test_parameter_hash_tracks_mutation(self):
        module = _module()
        before = parameter_hash(module)
        with torch.no_grad():
            module[0].weight[0, 0, 0, 0] += 1.0
        assert parameter_hash(module) != before


class TestSeeds:
    def test_derive_seed_stable_and_distinct(self):
        assert derive_seed(7, "road", 2) == derive_seed(7, "road", 2)
        assert derive_seed(7, "road", 2) != derive_seed(7, "road", 3)
        assert 0 <= derive_seed("x") < 2**63

    def test_seed_everything_reproducible(self):
        a = torch.rand(3, generator=seed_everything(5))
        b = torch.rand(3, generator=seed_everything(5))
        assert torch.equal(a, b)


class TestWorkspaceLayout:
    def test_paths(self, tmp_path):
        layout = WorkspaceLayout(tmp_path)
        assert layout.detector("black_box") == tmp_path / "detectors" / "black_box"
        assert layout.stage_dir("one_stage") == tmp_path / "onestage"
        assert layout.eval == tmp_path / "eval"

    def test_unknown_names(self, tmp_path):
        layout = WorkspaceLayout(tmp_path)
        with pytest.raises(InvalidConfigurationError):
            layout.detector("grey_box")
        with pytest.raises(InvalidConfigurationError):
            layout.stage_dir("three_stage")
