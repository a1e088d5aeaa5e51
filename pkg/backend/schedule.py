"""
Agendas de ruído e estimativa de um passo.

Difusão:
    z_t  = √ᾱ_t · z₀ + √(1 − ᾱ_t) · ε
    ẑ₀   = (z_t − √(1 − ᾱ_t) · ε_θ) / √ᾱ_t

Fluxo retificado (t ∈ [0, 1]):
    z_t  = (1 − t) · z₀ + t · ε
    ẑ₀   = z_t + t · ε_θ   (alvo "data_minus_noise": ε_θ ≈ z₀ − ε)
    ẑ₀   = z_t − t · ε_θ   (alvo "noise_minus_data": ε_θ ≈ ε − z₀)
"""

from typing import Optional, Sequence, Union

import torch

from latent_camo.core.exceptions import DataValidationError, NumericalError
from latent_camo.utils.config import BackendConfig

TimeLike = Union[int, float, torch.Tensor]

RECTFLOW_TARGETS = ("data_minus_noise", "noise_minus_data")


class NoiseSchedule:
    """
    Agenda de ruído nos modos "diffusion" (ᾱ discreto) e "rectflow" (t contínuo).

    Em difusão, os passos são índices 0..T−1 e ᾱ é estritamente decrescente em (0, 1].
    """

    def __init__(
        self,
        mode: str,
        alpha_bars: Optional[torch.Tensor] = None,
        prediction_target: str = "data_minus_noise",
    ):
        if mode not in ("diffusion", "rectflow"):
            raise DataValidationError(f"Modo de agenda desconhecido: {mode}")
        self.mode = mode
        self.prediction_target = prediction_target
        self.alpha_bars: Optional[torch.Tensor] = None

        if mode == "diffusion":
            if alpha_bars is None:
                raise DataValidationError("Agenda de difusão requer alpha_bars")
            values = torch.as_tensor(alpha_bars, dtype=torch.float64).flatten()
            if values.numel() < 1:
                raise DataValidationError("alpha_bars vazio")
            if not torch.isfinite(values).all():
                raise DataValidationError("alpha_bars contém valores não finitos")
            if values[0] > 1 or values[-1] <= 0:
                raise DataValidationError("alpha_bars deve estar em (0, 1]")
            if values.numel() > 1 and not (values[1:] < values[:-1]).all():
                raise DataValidationError("alpha_bars deve ser estritamente decrescente")
            self.alpha_bars = values
        else:
            if alpha_bars is not None:
                raise DataValidationError("Agenda de fluxo retificado não armazena alpha_bars")
            if prediction_target not in RECTFLOW_TARGETS:
                raise DataValidationError(
                    f"prediction_target deve ser um de {RECTFLOW_TARGETS}, recebido {prediction_target}"
                )

    # ------------------------------------------------------------------
    # Construtores
    # ------------------------------------------------------------------

    @classmethod
    def linear(cls, num_timesteps: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02) -> "NoiseSchedule":
        """Agenda de difusão com β linear; ᾱ_t = Π (1 − β_s)."""
        betas = torch.linspace(beta_start, beta_end, num_timesteps, dtype=torch.float64)
        return cls("diffusion", alpha_bars=torch.cumprod(1.0 - betas, dim=0))

    @classmethod
    def from_alpha_bars(cls, values: Sequence[float]) -> "NoiseSchedule":
        """Agenda de difusão a partir de ᾱ explícitos (validados)."""
        return cls("diffusion", alpha_bars=torch.as_tensor(values, dtype=torch.float64))

    @classmethod
    def rectflow(cls, prediction_target: str = "data_minus_noise") -> "NoiseSchedule":
        """Convenção contínua do fluxo retificado."""
        return cls("rectflow", prediction_target=prediction_target)

    @classmethod
    def from_config(cls, config: BackendConfig) -> "NoiseSchedule":
        if config.mode == "diffusion":
            return cls.linear(config.num_train_timesteps, config.beta_start, config.beta_end)
        return cls.rectflow(config.rectflow_target)

    # ------------------------------------------------------------------
    # Tempo
    # ------------------------------------------------------------------

    @property
    def num_timesteps(self) -> int:
        return 0 if self.alpha_bars is None else int(self.alpha_bars.numel())

    @property
    def initial_t(self) -> TimeLike:
        """Tempo inicial da amostragem (ruído puro)."""
        return self.num_timesteps - 1 if self.mode == "diffusion" else 1.0

    def validate_t(self, t: torch.Tensor) -> None:
        """
        Raises:
            DataValidationError: Índice fora de [0, T) (difusão) ou t fora de [0, 1] (fluxo)
        """
        if self.mode == "diffusion":
            if t.is_floating_point() and not torch.equal(t, t.round()):
                raise DataValidationError("Passos de difusão devem ser inteiros")
            if (t < 0).any() or (t >= self.num_timesteps).any():
                raise DataValidationError(f"t fora de [0, {self.num_timesteps})")
        else:
            if not torch.isfinite(t).all() or (t < 0).any() or (t > 1).any():
                raise DataValidationError("t fora de [0, 1]")

    def alpha_bar(self, t: TimeLike) -> torch.Tensor:
        """ᾱ_t (float64) para índices inteiros."""
        if self.alpha_bars is None:
            raise DataValidationError("alpha_bar indefinido no modo rectflow")
        t = torch.as_tensor(t)
        self.validate_t(t)
        return self.alpha_bars.to(t.device)[t.long()]

    def sample_timesteps(self, batch_size: int, generator: torch.Generator) -> torch.Tensor:
        """Tempo uniforme por exemplo: índice em [0, T) ou t em [0, 1)."""
        if self.mode == "diffusion":
            return torch.randint(0, self.num_timesteps, (batch_size,), generator=generator)
        return torch.rand(batch_size, generator=generator, dtype=torch.float64)

    def sampling_timesteps(self, steps: int) -> torch.Tensor:
        """
        Sequência de tempos da amostragem.

        Difusão: `steps` índices decrescentes de T−1 a 0. Fluxo: `steps + 1`
        pontos de 1 a 0 (extremos das integrações de Euler).
        """
        if steps < 1:
            raise DataValidationError("steps deve ser >= 1")
        if self.mode == "diffusion":
            if steps > self.num_timesteps:
                raise DataValidationError(f"steps deve ser <= {self.num_timesteps}")
            if steps == 1:
                return torch.tensor([self.num_timesteps - 1])
            return torch.linspace(self.num_timesteps - 1, 0, steps, dtype=torch.float64).round().long()
        return torch.linspace(1.0, 0.0, steps + 1, dtype=torch.float64)

    def time_input(self, t: torch.Tensor) -> torch.Tensor:
        """Valor contínuo fornecido à incorporação temporal do denoiser."""
        if self.mode == "diffusion":
            return t.to(torch.float64)
        return t.to(torch.float64) * 1000.0

    # ------------------------------------------------------------------
    # Alvos
    # ------------------------------------------------------------------

    def training_target(self, z0: torch.Tensor, eps: torch.Tensor) -> torch.Tensor:
        """Alvo de predição do denoiser para (z₀, ε)."""
        if self.mode == "diffusion":
            return eps
        if self.prediction_target == "data_minus_noise":
            return z0 - eps
        return eps - z0

    def velocity(self, pred: torch.Tensor) -> torch.Tensor:
        """dz/dt = ε − z₀ expresso em termos da predição (fluxo retificado)."""
        return -pred if self.prediction_target == "data_minus_noise" else pred


def _broadcast(values: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    """Ajusta (B,) ou escalar para broadcasting contra (B, C, h, w)."""
    values = values.to(device=like.device, dtype=like.dtype)
    if values.dim() == 0:
        return values
    return values.reshape(-1, *([1] * (like.dim() - 1)))


def as_timesteps(t: TimeLike, schedule: NoiseSchedule) -> torch.Tensor:
    """Converte e valida t (inteiro em difusão, float64 em fluxo retificado)."""
    t = torch.as_tensor(t)
    if schedule.mode == "diffusion" and not t.is_floating_point():
        t = t.long()
    elif schedule.mode == "rectflow":
        t = t.to(torch.float64)
    schedule.validate_t(t)
    return t


def forward_noise(z0: torch.Tensor, t: TimeLike, eps: torch.Tensor, schedule: NoiseSchedule) -> torch.Tensor:
    """
    Processo direto: adiciona ruído ε a z₀ no tempo t.

    Args:
        z0: Latente limpo (B, C, h, w) ou qualquer formato
        t: Índice (difusão) ou tempo contínuo (fluxo); escalar ou (B,)
        eps: Ruído fornecido pelo chamador (mesmo formato de z0)
        schedule: Agenda de ruído

    Raises:
        DataValidationError: Se t estiver fora da faixa ou os formatos divergirem
    """
    if z0.shape != eps.shape:
        raise DataValidationError(f"z0 e eps com formatos diferentes: {tuple(z0.shape)} vs {tuple(eps.shape)}")
    t = as_timesteps(t, schedule)
    if schedule.mode == "diffusion":
        alpha_bar = _broadcast(schedule.alpha_bar(t), z0)
        return alpha_bar.sqrt() * z0 + (1 - alpha_bar).sqrt() * eps
    tt = _broadcast(t, z0)
    return (1 - tt) * z0 + tt * eps


def estimate_clean_latent(zt: torch.Tensor, alpha_bar: torch.Tensor, pred: torch.Tensor) -> torch.Tensor:
    """
    Inversão de difusão dada ᾱ explícito: (z_t − √(1 − ᾱ) · pred) / √ᾱ.

    Raises:
        NumericalError: Se algum ᾱ for zero (singularidade)
    """
    alpha_bar = torch.as_tensor(alpha_bar)
    if (alpha_bar <= 0).any():
        raise NumericalError("ᾱ_t = 0: estimativa de um passo singular")
    alpha_bar = _broadcast(alpha_bar, zt)
    return (zt - (1 - alpha_bar).sqrt() * pred) / alpha_bar.sqrt()


def one_step_estimate(zt: torch.Tensor, t: TimeLike, pred: torch.Tensor, schedule: NoiseSchedule) -> torch.Tensor:
    """
    Estimativa de um passo do latente limpo a partir de z_t e da predição.

    Raises:
        DataValidationError: t fora da faixa ou formatos divergentes
        NumericalError: ᾱ_t = 0
    """
    if zt.shape != pred.shape:
        raise DataValidationError(f"zt e pred com formatos diferentes: {tuple(zt.shape)} vs {tuple(pred.shape)}")
    t = as_timesteps(t, schedule)
    if schedule.mode == "diffusion":
        return estimate_clean_latent(zt, schedule.alpha_bar(t), pred)
    tt = _broadcast(t, zt)
    if schedule.prediction_target == "data_minus_noise":
        return zt + tt * pred
    return zt - tt * pred
