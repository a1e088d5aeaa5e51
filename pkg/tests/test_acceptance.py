"""
Execução completa na configuração padrão (escala de bancada).

Lenta: roda apenas com LATENT_CAMO_RUN_SLOW=1.
"""

import json

import pytest

from latent_camo.backend.autoencoder import LatentAutoencoder
from latent_camo.cli import main
from latent_camo.corpus.storage import manifest_hash, read_corpus
from latent_camo.critic.model import LatentCritic
from latent_camo.critic.training import critic_accuracy
from latent_camo.evaluation.report_exporter import load_report
from latent_camo.optimization.benchmark import AblationBenchmark
from latent_camo.utils.checkpoint import load_checkpoint
from latent_camo.utils.config import RunConfig
from latent_camo.utils.workspace import WorkspaceLayout

pytestmark = pytest.mark.slow

COMMANDS = [
    "gen-data",
    "train-ae",
    "train-critic",
    "train-detector",
    "train-denoiser",
    "train-stage1",
    "train-stage2",
    "train-onestage",
    "eval",
    "eval --stage no_box",
    "eval-defense",
]


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    data = RunConfig.default().to_dict()
    data["onestage"]["iterations"] = data["stage1"]["iterations"] + data["stage2"]["iterations"]
    config_path = root / "run.json"
    config_path.write_text(json.dumps(data), encoding="utf-8")
    work = root / "work"
    for command in COMMANDS:
        code = main(["--config", str(config_path), "--out", str(work), *command.split()])
        assert code == 0, command
    return WorkspaceLayout(work), RunConfig.from_dict(data)


def _row(report, detector_id, condition, stage="white_box"):
    return next(
        r
        for r in report.rows
        if r.detector_id == detector_id and r.condition == condition and r.strategy.endswith(f"/{stage}")
    )


def test_autoencoder_reconstruction(full_run):
    layout, _ = full_run
    assert load_checkpoint(layout.autoencoder).metadata["val_psnr_db"] >= 28.0


def test_critic_held_out_accuracy(full_run):
    layout, config = full_run
    accuracy = critic_accuracy(
        LatentCritic.load(layout.critic),
        LatentAutoencoder.load(layout.autoencoder),
        read_corpus(layout.corpus, "val"),
        config.corpus.scene_labels,
    )
    assert accuracy >= 0.80


def test_attack_strength_and_stealth(full_run):
    layout, _ = full_run
    report = load_report(layout.eval / "report.json")
    white, black = _row(report, "white_box", "attack"), _row(report, "black_box", "attack")
    assert white.ap50_clean >= 0.90 and black.ap50_clean >= 0.90
    assert white.ap50_drop >= 40.0
    assert black.ap50_drop >= 20.0
    assert white.ssim_mean >= 0.70


def test_defenses_do_not_restore_detection(full_run):
    layout, config = full_run
    report = load_report(layout.eval / "report.json")
    for defense in config.eval.defenses:
        row = _row(report, "white_box", f"defense:{defense}")
        assert row.ap50_clean - row.ap50_attacked >= 0.20


def test_adversarial_term_drives_the_drop(full_run):
    layout, config = full_run
    report = load_report(layout.eval / "report.json")
    comparison = AblationBenchmark(config).compare_adversarial(
        _row(report, "white_box", "attack"), _row(report, "white_box", "attack", stage="no_box")
    )
    assert comparison.holds, comparison.details


def test_two_stage_keeps_style_better(full_run):
    layout, config = full_run
    comparison = AblationBenchmark(config).compare_style(
        layout.stage_dir("white_box"), layout.stage_dir("one_stage")
    )
    assert comparison.holds


def test_corpus_regeneration_is_identical(full_run, tmp_path):
    layout, _ = full_run
    assert main(["--out", str(tmp_path), "gen-data"]) == 0
    assert manifest_hash(tmp_path / "corpus") == manifest_hash(layout.corpus)
