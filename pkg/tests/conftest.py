"""
Fixtures compartilhadas: configurações reduzidas (imagens 32×32, latente 16×16)
e modelos pequenos marcados como prontos.
"""

import os

import pytest
import torch

from latent_camo.backend.autoencoder import AutoencoderSpec, LatentAutoencoder
from latent_camo.backend.denoiser import ConditionalDenoiser, DenoiserSpec
from latent_camo.backend.schedule import NoiseSchedule
from latent_camo.corpus.generator import generate_split
from latent_camo.critic.model import CriticSpec, LatentCritic
from latent_camo.detection.model import DetectorSpec, ToyDetector
from latent_camo.utils.config import (
    BackendConfig,
    CorpusConfig,
    CriticConfig,
    DetectorConfig,
    EvalConfig,
    RunConfig,
    StageConfig,
    StrategyConfig,
)

RUN_SLOW = os.getenv("LATENT_CAMO_RUN_SLOW") == "1"


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip_slow = pytest.mark.skip(reason="execução completa (defina LATENT_CAMO_RUN_SLOW=1)")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def tiny_corpus_config(**overrides) -> CorpusConfig:
    params = dict(
        image_size=32,
        train_size=10,
        val_size=5,
        test_size=5,
        vehicle_min_px=10,
        vehicle_max_px=14,
        corner_radius_min=1,
        corner_radius_max=2,
        vehicle_margin_px=4,
    )
    params.update(overrides)
    return CorpusConfig(**params)


def tiny_backend_config(**overrides) -> BackendConfig:
    params = dict(
        latent_channels=4,
        downsample_factor=2,
        ae_hidden_channels=8,
        ae_epochs=1,
        ae_batch_size=4,
        num_train_timesteps=50,
        denoiser_hidden_channels=8,
        time_embedding_dim=16,
        sampling_steps=3,
        pretrain_iterations=2,
        pretrain_batch_size=2,
    )
    params.update(overrides)
    return BackendConfig(**params)


def tiny_stage(stage: str, **overrides) -> StageConfig:
    params = dict(
        stage=stage,
        iterations=2,
        batch_size=2,
        learning_rate=1e-3,
        checkpoint_every=1,
        log_every=1,
        probe_size=2,
        init_from_base=False,
    )
    params.update(overrides)
    return StageConfig(**params)


def tiny_run_config(mode: str = "diffusion", strategy: str = "image_level", seed: int = 0) -> RunConfig:
    return RunConfig(
        corpus=tiny_corpus_config(),
        backend=tiny_backend_config(mode=mode),
        critic=CriticConfig(channels=(8, 8, 8), epochs=1, batch_size=4),
        detector=DetectorConfig(epochs=1, batch_size=4),
        strategy=StrategyConfig(mode=strategy),
        stage1=tiny_stage("no_box"),
        stage2=tiny_stage("white_box"),
        onestage=tiny_stage("one_stage"),
        eval=EvalConfig(n_backgrounds=1, max_records=2, defenses=("bilateral",)),
        seed=seed,
    )


@pytest.fixture
def corpus_config() -> CorpusConfig:
    return tiny_corpus_config()


@pytest.fixture
def backend_config() -> BackendConfig:
    return tiny_backend_config()


@pytest.fixture
def run_config() -> RunConfig:
    return tiny_run_config()


@pytest.fixture(scope="session")
def make_run_config():
    """Fábrica de RunConfig reduzida (modo do backend, estratégia, semente)."""
    return tiny_run_config


@pytest.fixture(scope="session")
def make_corpus_config():
    return tiny_corpus_config


@pytest.fixture
def records(corpus_config):
    return generate_split(corpus_config, "train", run_seed=0)


@pytest.fixture
def val_records(corpus_config):
    return generate_split(corpus_config, "val", run_seed=0)


@pytest.fixture
def autoencoder(backend_config) -> LatentAutoencoder:
    torch.manual_seed(0)
    model = LatentAutoencoder(AutoencoderSpec.from_config(backend_config))
    model.mark_trained(1.0)
    return model.eval()


@pytest.fixture
def critic() -> LatentCritic:
    torch.manual_seed(1)
    model = LatentCritic(CriticSpec(latent_channels=4, channels=(8, 8, 8), num_classes=5))
    model.mark_trained()
    return model.eval()


@pytest.fixture
def detector() -> ToyDetector:
    torch.manual_seed(2)
    model = ToyDetector(DetectorSpec("wide_shallow"))
    model.mark_trained()
    return model.eval()


@pytest.fixture
def denoiser(backend_config) -> ConditionalDenoiser:
    torch.manual_seed(3)
    return ConditionalDenoiser(DenoiserSpec.from_config(backend_config)).eval()


@pytest.fixture
def diffusion_schedule(backend_config) -> NoiseSchedule:
    return NoiseSchedule.from_config(backend_config)
