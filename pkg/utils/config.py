"""
Configurações do sistema, incluindo pesos das funções de perda.

Este módulo centraliza todas as configurações de uma execução (corpus,
backend generativo, crítico, detectores, estratégia de referência, estágios
de treino e avaliação), permitindo ajuste fino a partir de um único JSON.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Type, TypeVar

from latent_camo.core.exceptions import InvalidConfigurationError

T = TypeVar("T")

SCENE_LABELS: Tuple[str, ...] = ("urban", "rural", "road", "sky", "lake")

# Pareamento cena → conceito usado na estratégia de nível de cena
MAIN_CONCEPT_MAP: Dict[str, str] = {
    "urban": "building",
    "rural": "grass",
    "road": "tree",
    "sky": "sky",
    "lake": "water",
}

# Pareamento alternativo (troca de conceito por cena)
ALTERNATIVE_CONCEPT_MAP: Dict[str, str] = {
    "urban": "platform",
    "rural": "tree",
    "road": "road",
    "sky": "cloud",
    "lake": "beach",
}

STAGE_NAMES = ("no_box", "white_box", "one_stage")
LOSS_TERMS = ("struct", "style", "background", "adversarial", "color")


@dataclass
class LossWeights:
    """
    Pesos das funções de perda dos dois estágios.

    Estágio 1 (sem caixa):
        L_i = s * L_struct + α * L_s + β * L_b

    Estágio 2 (caixa branca):
        L_a = L_i + λ * L_adv + γ * L_c

    Onde:
    - s (struct): Peso da preservação de estrutura (1.0 na formulação canônica)
    - α (alpha): Peso da perda de estilo
    - β (beta): Peso da reconstrução de fundo (0 na estratégia de nível de cena)
    - λ (lambda_): Peso da perda adversarial
    - γ (gamma): Peso da consistência de cor
    """

    alpha: float = 1.0  # α
    beta: float = 1.0  # β
    gamma: float = 2.0  # γ
    lambda_: float = 1.0  # λ
    struct: float = 1.0

    def __post_init__(self):
        """Valida que todos os pesos são não-negativos."""
        if any(w < 0 for w in [self.alpha, self.beta, self.gamma, self.lambda_, self.struct]):
            raise InvalidConfigurationError("Todos os pesos devem ser não-negativos")

    def as_term_weights(self) -> Dict[str, float]:
        """Mapeia cada termo de perda para o seu peso."""
        return {
            "struct": self.struct,
            "style": self.alpha,
            "background": self.beta,
            "adversarial": self.lambda_,
            "color": self.gamma,
        }

    @classmethod
    def preset(cls, name: str, stage: str) -> "LossWeights":
        """
        Retorna pesos de uma configuração de escala completa (ver `FULL_SCALE_PRESETS`).

        Args:
            name: Chave "dataset/detector/estratégia", ex.: "coco/faster_rcnn/scene_level"
            stage: "no_box" ou "white_box"

        Raises:
            InvalidConfigurationError: Se a chave ou o estágio não existirem
        """
        if name not in FULL_SCALE_PRESETS:
            raise InvalidConfigurationError(
                f"Preset desconhecido: {name}. Opções: {', '.join(sorted(FULL_SCALE_PRESETS))}"
            )
        stages = FULL_SCALE_PRESETS[name]
        if stage not in stages:
            raise InvalidConfigurationError(f"Estágio sem preset: {stage}")
        return cls(**stages[stage])


# Coeficientes usados em escala completa; lr e iterações não se aplicam ao modelo reduzido
FULL_SCALE_PRESETS: Dict[str, Dict[str, Dict[str, float]]] = {
    "coco/faster_rcnn/scene_level": {
        "no_box": dict(struct=5.0, alpha=1.0, beta=0.0, gamma=0.0, lambda_=0.0),
        "white_box": dict(struct=5.0, alpha=1.0, beta=0.0, gamma=2.0, lambda_=1.0),
    },
    "coco/faster_rcnn/image_level": {
        "no_box": dict(struct=2.5, alpha=2.5, beta=1.0, gamma=0.0, lambda_=0.0),
        "white_box": dict(struct=4.0, alpha=1.0, beta=1.0, gamma=2.0, lambda_=1.0),
    },
    "coco/vitdet/scene_level": {
        "no_box": dict(struct=5.0, alpha=1.0, beta=0.0, gamma=0.0, lambda_=0.0),
        "white_box": dict(struct=5.0, alpha=1.0, beta=0.0, gamma=2.0, lambda_=1.0),
    },
    "coco/vitdet/image_level": {
        "no_box": dict(struct=2.5, alpha=2.5, beta=1.0, gamma=0.0, lambda_=0.0),
        "white_box": dict(struct=10.0, alpha=2.5, beta=1.0, gamma=2.5, lambda_=1.0),
    },
    "linz/faster_rcnn/scene_level": {
        "no_box": dict(struct=4.0, alpha=1.0, beta=0.0, gamma=0.0, lambda_=0.0),
        "white_box": dict(struct=10.0, alpha=2.5, beta=0.0, gamma=2.5, lambda_=1.0),
    },
    "linz/faster_rcnn/image_level": {
        "no_box": dict(struct=5.0, alpha=5.0, beta=1.0, gamma=0.0, lambda_=0.0),
        "white_box": dict(struct=10.0, alpha=7.5, beta=1.0, gamma=7.5, lambda_=1.0),
    },
}
FULL_SCALE_PRESETS["linz/vitdet/scene_level"] = FULL_SCALE_PRESETS["linz/faster_rcnn/scene_level"]
FULL_SCALE_PRESETS["linz/vitdet/image_level"] = FULL_SCALE_PRESETS["linz/faster_rcnn/image_level"]


@dataclass
class LossToggles:
    """Liga/desliga cada termo de perda (ablação)."""

    struct: bool = True
    style: bool = True
    background: bool = True
    adversarial: bool = True
    color: bool = True

    def enabled(self, term: str) -> bool:
        return bool(getattr(self, term))


@dataclass
class CorpusConfig:
    """
    Configuração do corpus sintético.

    As partições usam faixas de sementes disjuntas derivadas da semente da execução.
    """

    image_size: int = 64
    scene_labels: Tuple[str, ...] = SCENE_LABELS
    train_size: int = 2000
    val_size: int = 200
    test_size: int = 200
    vehicle_min_px: int = 22
    vehicle_max_px: int = 30
    corner_radius_min: int = 2
    corner_radius_max: int = 4
    vehicle_margin_px: int = 6

    def __post_init__(self):
        """Valida configurações."""
        self.scene_labels = tuple(self.scene_labels)
        if self.image_size < 8 or self.image_size % 8 != 0:
            raise InvalidConfigurationError("image_size deve ser múltiplo de 8 e >= 8")
        unknown = [s for s in self.scene_labels if s not in SCENE_LABELS]
        if unknown:
            raise InvalidConfigurationError(f"Rótulos de cena desconhecidos: {unknown}")
        if len(self.scene_labels) == 0:
            raise InvalidConfigurationError("scene_labels não pode ser vazio")
        if min(self.train_size, self.val_size, self.test_size) < 0:
            raise InvalidConfigurationError("Tamanhos de partição devem ser >= 0")
        if not 4 <= self.vehicle_min_px <= self.vehicle_max_px:
            raise InvalidConfigurationError("Requer 4 <= vehicle_min_px <= vehicle_max_px")
        if not 0 <= self.corner_radius_min <= self.corner_radius_max:
            raise InvalidConfigurationError("Requer 0 <= corner_radius_min <= corner_radius_max")
        if 2 * self.corner_radius_max > self.vehicle_min_px:
            raise InvalidConfigurationError("corner_radius_max grande demais para o veículo")
        if self.vehicle_max_px + 2 * self.vehicle_margin_px > self.image_size:
            raise InvalidConfigurationError("Veículo com margem não cabe na imagem")


@dataclass
class BackendConfig:
    """Configuração do backend generativo (autoencoder, agenda de ruído, denoiser)."""

    mode: str = "diffusion"  # "diffusion" ou "rectflow"
    latent_channels: int = 4
    downsample_factor: int = 4
    ae_hidden_channels: int = 32
    ae_epochs: int = 20
    ae_learning_rate: float = 1e-3
    ae_batch_size: int = 32
    num_train_timesteps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    rectflow_target: str = "data_minus_noise"  # ou "noise_minus_data"
    denoiser_hidden_channels: int = 64
    time_embedding_dim: int = 64
    sampling_steps: Optional[int] = None  # None = 30 (diffusion) / 28 (rectflow)
    pretrain_iterations: int = 3000
    pretrain_learning_rate: float = 2e-4
    pretrain_batch_size: int = 16

    def __post_init__(self):
        """Valida configurações."""
        if self.mode not in ("diffusion", "rectflow"):
            raise InvalidConfigurationError("mode deve ser 'diffusion' ou 'rectflow'")
        if self.rectflow_target not in ("data_minus_noise", "noise_minus_data"):
            raise InvalidConfigurationError(
                "rectflow_target deve ser 'data_minus_noise' ou 'noise_minus_data'"
            )
        factor = self.downsample_factor
        if factor < 1 or factor & (factor - 1):
            raise InvalidConfigurationError("downsample_factor deve ser potência de 2")
        if self.latent_channels < 1:
            raise InvalidConfigurationError("latent_channels deve ser >= 1")
        if self.num_train_timesteps < 2:
            raise InvalidConfigurationError("num_train_timesteps deve ser >= 2")
        if not 0 < self.beta_start < self.beta_end < 1:
            raise InvalidConfigurationError("Requer 0 < beta_start < beta_end < 1")
        if self.sampling_steps is not None and self.sampling_steps < 1:
            raise InvalidConfigurationError("sampling_steps deve ser >= 1")

    @property
    def default_sampling_steps(self) -> int:
        """Passos de amostragem efetivos para o modo configurado."""
        if self.sampling_steps is not None:
            return self.sampling_steps
        return 30 if self.mode == "diffusion" else 28


@dataclass
class CriticConfig:
    """Configuração do crítico latente (substituto do LatentLPIPS)."""

    channels: Tuple[int, int, int] = (32, 64, 128)
    epochs: int = 15
    learning_rate: float = 1e-3
    batch_size: int = 64
    cutout_fraction: float = 0.5
    style_stages: Tuple[int, ...] = (0, 1, 2)
    stage_weights: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    stage_mask_mode: str = "max"  # "max" ou "nearest"
    selection_threshold: float = 0.5  # binarização das máscaras na resolução latente

    def __post_init__(self):
        """Valida configurações."""
        self.channels = tuple(self.channels)
        self.style_stages = tuple(self.style_stages)
        self.stage_weights = tuple(float(w) for w in self.stage_weights)
        if len(self.channels) != 3 or min(self.channels) < 1:
            raise InvalidConfigurationError("channels deve ter 3 inteiros positivos")
        if len(self.stage_weights) != 3 or min(self.stage_weights) < 0:
            raise InvalidConfigurationError("stage_weights deve ter 3 valores não-negativos")
        if not self.style_stages or any(s not in (0, 1, 2) for s in self.style_stages):
            raise InvalidConfigurationError("style_stages deve conter índices em {0, 1, 2}")
        if self.stage_mask_mode not in ("max", "nearest"):
            raise InvalidConfigurationError("stage_mask_mode deve ser 'max' ou 'nearest'")
        if not 0 < self.cutout_fraction < 1:
            raise InvalidConfigurationError("cutout_fraction deve estar em (0, 1)")
        if not 0 < self.selection_threshold < 1:
            raise InvalidConfigurationError("selection_threshold deve estar em (0, 1)")


@dataclass
class DetectorConfig:
    """Configuração dos detectores de brinquedo (alvo caixa branca e transferência)."""

    cell_size: int = 8
    epochs: int = 20
    learning_rate: float = 1e-3
    batch_size: int = 32
    positive_weight: float = 4.0
    box_loss_weight: float = 1.0
    conf_threshold: float = 0.5
    nms_iou: float = 0.5
    white_box_variant: str = "wide_shallow"
    black_box_variant: str = "narrow_deep"

    def __post_init__(self):
        """Valida configurações."""
        variants = ("wide_shallow", "narrow_deep")
        if self.white_box_variant not in variants or self.black_box_variant not in variants:
            raise InvalidConfigurationError(f"Variantes de detector suportadas: {variants}")
        if self.cell_size != 8:
            raise InvalidConfigurationError("cell_size suportado: 8 (stride da arquitetura)")
        if not 0 <= self.conf_threshold <= 1:
            raise InvalidConfigurationError("conf_threshold deve estar em [0, 1]")
        if not 0 < self.nms_iou <= 1:
            raise InvalidConfigurationError("nms_iou deve estar em (0, 1]")
        if self.positive_weight <= 0:
            raise InvalidConfigurationError("positive_weight deve ser positivo")


@dataclass
class StrategyConfig:
    """
    Estratégia de seleção da referência de estilo.

    - image_level: anel dilatado ao redor do veículo na própria imagem
    - scene_level: exemplar procedural do conceito associado à cena
    """

    mode: str = "image_level"
    dilation_kernel_px: int = 9
    scene_concept_map: Dict[str, str] = field(default_factory=lambda: dict(MAIN_CONCEPT_MAP))
    exemplar_seed: int = 0

    def __post_init__(self):
        """Valida configurações."""
        if self.mode not in ("image_level", "scene_level"):
            raise InvalidConfigurationError("mode deve ser 'image_level' ou 'scene_level'")
        k = self.dilation_kernel_px
        if not isinstance(k, int) or k < 1 or k % 2 == 0:
            raise InvalidConfigurationError("dilation_kernel_px deve ser ímpar e positivo")
        self.scene_concept_map = dict(self.scene_concept_map)

    @property
    def is_scene_level(self) -> bool:
        return self.mode == "scene_level"


@dataclass
class StageConfig:
    """
    Configuração de um estágio de treino.

    `backend_mode` e `strategy` vazios são herdados da configuração da execução;
    os checkpoints vazios são resolvidos pela CLI a partir do diretório de trabalho.
    """

    stage: str = "no_box"
    weights: LossWeights = field(default_factory=LossWeights)
    learning_rate: float = 1e-4
    iterations: int = 3000
    batch_size: int = 8
    seed: Optional[int] = None
    backend_mode: Optional[str] = None
    strategy: Optional[StrategyConfig] = None
    detector_checkpoint: Optional[str] = None
    stage1_checkpoint: Optional[str] = None
    base_checkpoint: Optional[str] = None
    init_from_base: bool = True
    loss_toggles: LossToggles = field(default_factory=LossToggles)
    checkpoint_every: int = 500
    log_every: int = 50
    probe_size: int = 8

    def __post_init__(self):
        """Valida configurações."""
        if self.stage not in STAGE_NAMES:
            raise InvalidConfigurationError(f"stage deve ser um de {STAGE_NAMES}")
        if self.learning_rate <= 0:
            raise InvalidConfigurationError("learning_rate deve ser positivo")
        if self.iterations < 1:
            raise InvalidConfigurationError("iterations deve ser >= 1")
        if self.batch_size < 1:
            raise InvalidConfigurationError("batch_size deve ser >= 1")
        if self.checkpoint_every < 1 or self.log_every < 1:
            raise InvalidConfigurationError("checkpoint_every e log_every devem ser >= 1")
        if self.backend_mode is not None and self.backend_mode not in ("diffusion", "rectflow"):
            raise InvalidConfigurationError("backend_mode deve ser 'diffusion' ou 'rectflow'")
        if self.stage == "one_stage" and self.loss_toggles.color:
            # Sem cópia congelada não existe referência para L_c
            self.loss_toggles.color = False

    def effective_weights(self) -> LossWeights:
        """Pesos efetivos: β é forçado a 0 na estratégia de nível de cena."""
        if self.strategy is not None and self.strategy.is_scene_level and self.weights.beta != 0:
            return LossWeights(
                alpha=self.weights.alpha,
                beta=0.0,
                gamma=self.weights.gamma,
                lambda_=self.weights.lambda_,
                struct=self.weights.struct,
            )
        return self.weights


@dataclass
class EvalConfig:
    """Configuração da avaliação (métricas, defesas e transferência)."""

    crop_margin: float = 0.1
    score_threshold: float = 0.05  # confiança mínima das detecções pontuadas (AP50, F1)
    n_backgrounds: int = 5
    defenses: Tuple[str, ...] = ("nlm", "bilateral")
    nlm_patch_size: int = 3
    nlm_search_window: int = 7
    nlm_h: float = 0.1
    bilateral_sigma_spatial: float = 2.0
    bilateral_sigma_color: float = 0.1
    sample_seed: int = 0
    max_records: Optional[int] = None

    def __post_init__(self):
        """Valida configurações."""
        self.defenses = tuple(self.defenses)
        if self.crop_margin < 0:
            raise InvalidConfigurationError("crop_margin deve ser >= 0")
        if not 0 <= self.score_threshold < 1:
            raise InvalidConfigurationError("score_threshold deve estar em [0, 1)")
        if self.n_backgrounds < 0:
            raise InvalidConfigurationError("n_backgrounds deve ser >= 0")
        unknown = [d for d in self.defenses if d not in ("none", "nlm", "bilateral")]
        if unknown:
            raise InvalidConfigurationError(f"Defesas desconhecidas: {unknown}")
        for name in ("nlm_patch_size", "nlm_search_window"):
            value = getattr(self, name)
            if value < 1 or value % 2 == 0:
                raise InvalidConfigurationError(f"{name} deve ser ímpar e positivo")
        if self.nlm_h <= 0 or self.bilateral_sigma_color <= 0 or self.bilateral_sigma_spatial <= 0:
            raise InvalidConfigurationError("Parâmetros de filtro devem ser positivos")


@dataclass
class RunConfig:
    """
    Configuração geral de uma execução.

    Centraliza todas as configurações em um único lugar; é o documento JSON
    aceito pela CLI via `--config`.
    """

    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    critic: CriticConfig = field(default_factory=CriticConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    stage1: StageConfig = field(default_factory=lambda: StageConfig(stage="no_box"))
    stage2: StageConfig = field(default_factory=lambda: StageConfig(stage="white_box"))
    onestage: StageConfig = field(default_factory=lambda: StageConfig(stage="one_stage"))
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0

    def __post_init__(self):
        """Valida consistência entre seções e herda modo/estratégia nos estágios."""
        expected = {"stage1": "no_box", "stage2": "white_box", "onestage": "one_stage"}
        for section, stage in expected.items():
            cfg: StageConfig = getattr(self, section)
            if cfg.stage != stage:
                raise InvalidConfigurationError(f"Seção {section} deve ter stage='{stage}'")
            if cfg.backend_mode is None:
                cfg.backend_mode = self.backend.mode
            elif cfg.backend_mode != self.backend.mode:
                raise InvalidConfigurationError(
                    f"{section}.backend_mode difere de backend.mode ({self.backend.mode})"
                )
            if cfg.strategy is None:
                cfg.strategy = self.strategy
            if cfg.seed is None:
                cfg.seed = self.seed
        strategies = {"strategy": self.strategy}
        strategies.update({f"{section}.strategy": getattr(self, section).strategy for section in expected})
        for name, strategy in strategies.items():
            if not strategy.is_scene_level:
                continue
            missing = [s for s in self.corpus.scene_labels if s not in strategy.scene_concept_map]
            if missing:
                raise InvalidConfigurationError(
                    f"{name}.scene_concept_map não cobre as cenas configuradas: {missing}"
                )

    @classmethod
    def default(cls) -> "RunConfig":
        """Retorna configuração padrão do sistema."""
        return cls()

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        """
        Constrói a configuração a partir de um dicionário (JSON já carregado).

        Raises:
            InvalidConfigurationError: Se houver chaves desconhecidas em qualquer nível
        """
        return _build(cls, data, "config")

    @classmethod
    def from_json(cls, path: Path) -> "RunConfig":
        """Carrega a configuração de um arquivo JSON."""
        path = Path(path)
        if not path.exists():
            raise InvalidConfigurationError(f"Arquivo de configuração não encontrado: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise InvalidConfigurationError(f"JSON inválido em {path}: {e}") from e
        if not isinstance(data, dict):
            raise InvalidConfigurationError("A configuração deve ser um objeto JSON")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        """SHA-256 do JSON canônico da configuração."""
        return config_hash(self.to_dict())

    def with_seed(self, seed: int) -> "RunConfig":
        """Cópia da configuração com outra semente global."""
        data = self.to_dict()
        data["seed"] = seed
        for section in ("stage1", "stage2", "onestage"):
            data[section]["seed"] = None
        return RunConfig.from_dict(data)


def config_hash(data: Mapping[str, Any]) -> str:
    """SHA-256 do JSON canônico (chaves ordenadas, sem espaços)."""
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# Seções aninhadas por classe: campo → classe dataclass
_NESTED: Dict[type, Dict[str, type]] = {
    RunConfig: {
        "corpus": CorpusConfig,
        "backend": BackendConfig,
        "critic": CriticConfig,
        "detector": DetectorConfig,
        "strategy": StrategyConfig,
        "stage1": StageConfig,
        "stage2": StageConfig,
        "onestage": StageConfig,
        "eval": EvalConfig,
    },
    StageConfig: {
        "weights": LossWeights,
        "strategy": StrategyConfig,
        "loss_toggles": LossToggles,
    },
}


def _build(cls: Type[T], data: Any, path: str) -> T:
    if isinstance(data, cls):
        return data
    if not isinstance(data, Mapping):
        raise InvalidConfigurationError(f"{path} deve ser um objeto, recebido {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InvalidConfigurationError(f"Chaves desconhecidas em {path}: {', '.join(unknown)}")
    kwargs: Dict[str, Any] = {}
    nested = _NESTED.get(cls, {})
    for key, value in data.items():
        if key in nested and value is not None:
            kwargs[key] = _build(nested[key], value, f"{path}.{key}")
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise InvalidConfigurationError(f"Valores inválidos em {path}: {e}") from e
