"""Testes dos treinadores de estágio, do pré-treino do denoiser e da ablação."""

import json
from dataclasses import replace

import pytest
import torch

from latent_camo.backend.autoencoder import AutoencoderSpec, LatentAutoencoder
from latent_camo.backend.denoiser import ConditionalDenoiser
from latent_camo.backend.schedule import NoiseSchedule
from latent_camo.core.exceptions import (
    DataValidationError,
    InvalidConfigurationError,
    NotReadyError,
    NumericalError,
    TrainingError,
)
from latent_camo.core.models import EvalRow, LossReport, read_jsonl
from latent_camo.detection.model import ToyDetector
from latent_camo.optimization.base_trainer import StageArtifacts, checkpoint_steps, latest_checkpoint
from latent_camo.optimization.benchmark import AblationBenchmark, final_probe
from latent_camo.optimization.denoiser_pretrainer import DenoiserPretrainer
from latent_camo.optimization.factory import TrainerFactory, load_stage_artifacts, stage_config
from latent_camo.optimization.no_box_trainer import NoBoxTrainer
from latent_camo.optimization.one_stage_trainer import OneStageTrainer
from latent_camo.optimization.white_box_trainer import WhiteBoxTrainer
from latent_camo.utils.checkpoint import load_checkpoint, parameter_hash
from latent_camo.utils.config import StageConfig, StrategyConfig
from latent_camo.utils.workspace import WorkspaceLayout


def _reports(run_dir):
    return [LossReport.from_dict(item) for item in read_jsonl(run_dir / "losses.jsonl")]


def _artifacts(config, autoencoder, critic, detector=None, **extra) -> StageArtifacts:
    return StageArtifacts(
        autoencoder=autoencoder,
        critic=critic,
        schedule=NoiseSchedule.from_config(config.backend),
        detector=detector,
        **extra,
    )


@pytest.fixture
def artifacts(run_config, autoencoder, critic, detector):
    return _artifacts(run_config, autoencoder, critic, detector)


class TestNoBoxTrainer:
    def test_writes_run_directory(self, run_config, artifacts, records, tmp_path):
        run_dir = tmp_path / "stage1"
        result = TrainerFactory.create("no_box", run_config, artifacts).train(records, run_dir)

        reports = _reports(run_dir)
        assert [r.step for r in reports] == [1, 2]
        for report in reports:
            assert set(report.terms) == {"struct", "style", "background"}
            assert report.total == pytest.approx(report.recomputed_total(), abs=1e-6)
        assert result.final_report["total"] == pytest.approx(reports[-1].total)

        assert checkpoint_steps(run_dir) == [1, 2]
        assert latest_checkpoint(run_dir) == result.checkpoint_dir
        probe = json.loads((run_dir / "probe" / "step_2.json").read_text(encoding="utf-8"))
        assert {"step", "struct", "style", "detector_confidence"} <= set(probe)
        assert (run_dir / "run.log").exists()

        written = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
        assert written["config_hash"] == run_config.config_hash()
        assert written["effective_weights"]["background"] == 1.0

    def test_checkpoint_matches_trained_model(self, run_config, artifacts, records, tmp_path):
        trainer = TrainerFactory.create("no_box", run_config, artifacts)
        result = trainer.train(records, tmp_path / "run")
        loaded = ConditionalDenoiser.load(result.checkpoint_dir)
        for name, tensor in trainer.model.state_dict().items():
            torch.testing.assert_close(loaded.state_dict()[name], tensor)

    def test_deterministic_for_fixed_seed(self, make_run_config, autoencoder, critic, detector, records, tmp_path):
        totals = []
        for name in ("a", "b"):
            config = make_run_config()
            trainer = TrainerFactory.create("no_box", config, _artifacts(config, autoencoder, critic, detector))
            trainer.train(records, tmp_path / name)
            totals.append([r.total for r in _reports(tmp_path / name)])
        assert totals[0] == pytest.approx(totals[1], rel=1e-6)

    def test_scene_level_zeroes_background(self, make_run_config, autoencoder, critic, records, tmp_path):
        config = make_run_config(strategy="scene_level")
        trainer = TrainerFactory.create("no_box", config, _artifacts(config, autoencoder, critic))
        assert trainer.weights.beta == 0.0
        trainer.train(records, tmp_path / "run")
        assert all(r.terms["background"] == 0.0 for r in _reports(tmp_path / "run"))

    def test_rectflow_backend(self, make_run_config, autoencoder, critic, records, tmp_path):
        config = make_run_config(mode="rectflow")
        result = TrainerFactory.create("no_box", config, _artifacts(config, autoencoder, critic)).train(
            records, tmp_path / "run"
        )
        assert load_checkpoint(result.checkpoint_dir).metadata["mode"] == "rectflow"

    def test_degenerate_records_are_skipped(self, run_config, artifacts, records, tmp_path):
        stage = replace(run_config.stage1, strategy=StrategyConfig(dilation_kernel_px=1))
        trainer = NoBoxTrainer(stage, artifacts, critic_config=run_config.critic)
        prepared, skipped = trainer.prepare_records(records)
        assert prepared == []
        assert skipped == [r.record_id for r in records]
        with pytest.raises(DataValidationError):
            trainer.train(records, tmp_path / "run")

    def test_selection_threshold_from_critic_config(self, run_config, artifacts):
        critic_config = replace(run_config.critic, selection_threshold=0.3)
        trainer = NoBoxTrainer(run_config.stage1, artifacts, critic_config=critic_config)
        assert trainer.loss.style_loss.selection_threshold == 0.3
        assert trainer.loss.background_loss.selection_threshold == 0.3

    def test_wrong_stage_section(self, run_config, artifacts):
        with pytest.raises(InvalidConfigurationError):
            NoBoxTrainer(run_config.stage2, artifacts)

    def test_unresolved_strategy(self, artifacts):
        with pytest.raises(InvalidConfigurationError):
            NoBoxTrainer(StageConfig(stage="no_box"), artifacts)

    def test_untrained_autoencoder(self, run_config, artifacts):
        fresh = LatentAutoencoder(AutoencoderSpec.from_config(run_config.backend))
        with pytest.raises(NotReadyError):
            TrainerFactory.create("no_box", run_config, replace(artifacts, autoencoder=fresh))

    def test_non_finite_loss(self, run_config, artifacts, records, tmp_path, mocker):
        trainer = TrainerFactory.create("no_box", run_config, artifacts)
        mocker.patch.object(trainer.loss, "calculate", return_value=torch.tensor(float("nan")))
        with pytest.raises(NumericalError):
            trainer.train(records, tmp_path / "run")


class TestWhiteBoxTrainer:
    def test_trains_from_stage1(self, run_config, autoencoder, critic, detector, denoiser, records, tmp_path):
        artifacts = _artifacts(run_config, autoencoder, critic, detector, stage1_model=denoiser)
        detector_hash = parameter_hash(detector)
        stage1_hash = parameter_hash(denoiser)

        trainer = TrainerFactory.create("white_box", run_config, artifacts)
        assert isinstance(trainer, WhiteBoxTrainer)
        result = trainer.train(records, tmp_path / "stage2")

        reports = _reports(tmp_path / "stage2")
        assert set(reports[0].terms) == {"struct", "style", "background", "adversarial", "color"}
        # No primeiro passo o modelo treinável ainda é igual ao congelado
        assert reports[0].terms["color"] == pytest.approx(0.0, abs=1e-8)
        assert reports[0].terms["adversarial"] > 0
        assert result.metadata["integrity_hashes"]["detector"] == detector_hash
        assert result.metadata["integrity_hashes"]["frozen_stage1"] == stage1_hash
        assert parameter_hash(denoiser) == stage1_hash

    def test_requires_stage1_model(self, run_config, artifacts, records, tmp_path):
        with pytest.raises(NotReadyError):
            TrainerFactory.create("white_box", run_config, artifacts).train(records, tmp_path / "run")

    def test_requires_detector(self, run_config, artifacts, denoiser):
        with pytest.raises(NotReadyError):
            TrainerFactory.create("white_box", run_config, replace(artifacts, detector=None, stage1_model=denoiser))

    def test_untrained_detector(self, run_config, artifacts, denoiser):
        with pytest.raises(NotReadyError):
            TrainerFactory.create(
                "white_box", run_config, replace(artifacts, detector=ToyDetector(), stage1_model=denoiser)
            )

    def test_frozen_model_change_detected(self, run_config, artifacts, denoiser, records, tmp_path, mocker):
        trainer = TrainerFactory.create("white_box", run_config, replace(artifacts, stage1_model=denoiser))
        mocker.patch.object(trainer, "_integrity_hashes", side_effect=[{"detector": "a"}, {"detector": "b"}])
        with pytest.raises(TrainingError):
            trainer.train(records, tmp_path / "run")


class TestOneStageTrainer:
    def test_color_term_is_disabled(self, run_config, artifacts, records, tmp_path):
        assert run_config.onestage.loss_toggles.color is False
        trainer = TrainerFactory.create("one_stage", run_config, artifacts)
        assert isinstance(trainer, OneStageTrainer)
        result = trainer.train(records, tmp_path / "run")
        reports = _reports(tmp_path / "run")
        assert all(r.terms["color"] == 0.0 for r in reports)
        assert all(r.terms["adversarial"] > 0 for r in reports)
        assert set(result.metadata["integrity_hashes"]) == {"detector"}


class TestDenoiserPretrainer:
    def test_pretrains_base_model(self, run_config, autoencoder, records, tmp_path):
        schedule = NoiseSchedule.from_config(run_config.backend)
        pretrainer = DenoiserPretrainer(run_config.backend, run_config.strategy, autoencoder, schedule, iterations=2)
        result = pretrainer.train(records, tmp_path / "base")
        assert checkpoint_steps(tmp_path / "base") == [2]
        assert [r.step for r in _reports(tmp_path / "base")] == [1, 2]
        assert isinstance(ConditionalDenoiser.load(result.checkpoint_dir), ConditionalDenoiser)

    def test_untrained_autoencoder(self, run_config):
        fresh = LatentAutoencoder(AutoencoderSpec.from_config(run_config.backend))
        schedule = NoiseSchedule.from_config(run_config.backend)
        with pytest.raises(NotReadyError):
            DenoiserPretrainer(run_config.backend, run_config.strategy, fresh, schedule)

    def test_stage_starts_from_base(self, run_config, artifacts, denoiser):
        stage = replace(run_config.stage1, init_from_base=True)
        trainer = NoBoxTrainer(stage, replace(artifacts, base_model=denoiser))
        model = trainer._initial_model()
        assert model is not denoiser
        assert parameter_hash(model) == parameter_hash(denoiser)
        assert all(p.requires_grad for p in model.parameters())


class TestFactory:
    def test_unknown_stage(self, run_config):
        with pytest.raises(InvalidConfigurationError):
            stage_config(run_config, "black_box")

    def test_load_white_box_artifacts(self, run_config, autoencoder, critic, detector, denoiser, tmp_path):
        layout = WorkspaceLayout(tmp_path)
        autoencoder.save(layout.autoencoder)
        critic.save(layout.critic)
        detector.save(layout.detector("white_box"))
        denoiser.save(layout.stage_dir("no_box") / "checkpoints" / "step_1")

        loaded = load_stage_artifacts(layout, run_config, "white_box")
        assert set(loaded.provenance) == {"autoencoder", "critic", "detector", "stage1"}
        assert loaded.stage1_model is not None and loaded.detector.is_ready
        assert loaded.schedule.mode == "diffusion"

    def test_missing_stage1_checkpoint(self, run_config, autoencoder, critic, detector, tmp_path):
        layout = WorkspaceLayout(tmp_path)
        autoencoder.save(layout.autoencoder)
        critic.save(layout.critic)
        detector.save(layout.detector("white_box"))
        with pytest.raises(NotReadyError):
            load_stage_artifacts(layout, run_config, "white_box")

    def test_no_box_without_detector_or_base(self, run_config, autoencoder, critic, tmp_path):
        layout = WorkspaceLayout(tmp_path)
        autoencoder.save(layout.autoencoder)
        critic.save(layout.critic)
        run_config.stage1 = replace(run_config.stage1, init_from_base=True)
        loaded = load_stage_artifacts(layout, run_config, "no_box")
        assert loaded.detector is None and loaded.base_model is None

    def test_missing_autoencoder(self, run_config, tmp_path):
        with pytest.raises(NotReadyError):
            load_stage_artifacts(WorkspaceLayout(tmp_path), run_config, "no_box")


class TestAblationBenchmark:
    def test_stage_ablation_exports_comparison(self, run_config, artifacts, records, tmp_path):
        result = AblationBenchmark(run_config).run_stage_ablation(records, artifacts, tmp_path)
        assert set(result.training_results) == {"no_box", "white_box", "one_stage"}
        assert result.training_results["one_stage"].steps == run_config.stage1.iterations + run_config.stage2.iterations
        (comparison,) = result.comparisons
        assert comparison.holds == (comparison.variant_value > comparison.baseline_value)
        exported = json.loads((tmp_path / "ablation.json").read_text(encoding="utf-8"))
        assert exported["all_hold"] == result.all_hold

    def test_adversarial_gap(self, run_config):
        full = EvalRow("wide_shallow", "image_level", "attack", ap50_clean=0.9, ap50_attacked=0.3)
        no_box = EvalRow("wide_shallow", "image_level", "attack", ap50_clean=0.9, ap50_attacked=0.8)
        comparison = AblationBenchmark(run_config).compare_adversarial(full, no_box)
        assert comparison.details["gap_points"] == pytest.approx(50.0)
        assert comparison.holds
        assert not AblationBenchmark(run_config).compare_adversarial(no_box, full).holds

    def test_final_probe_requires_checkpoints(self, tmp_path):
        with pytest.raises(NotReadyError):
            final_probe(tmp_path)
