"""
DTOs (Data Transfer Objects) para comunicação entre módulos.

IMPORTANTE: Estas são classes de transferência de dados, NÃO entidades de domínio.
As entidades de domínio estão em latent_camo.domain/

DTOs são usados para:
- Registro por passo dos treinos (losses.jsonl)
- Relatórios de avaliação (JSON e tabela de texto)
- Serialização/Deserialização (JSON lines)
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional

from latent_camo.core.exceptions import DataValidationError
from latent_camo.core.interfaces import Detection, DetectionSet, TrainingResult


@dataclass
class LossReport:
    """
    DTO: Valores dos termos de perda e total combinado de um passo.

    Invariante: total = Σ peso · termo (tolerância 1e-6).
    """

    step: int
    terms: Dict[str, float]
    weights: Dict[str, float]
    total: float

    @classmethod
    def from_terms(cls, step: int, terms: Mapping[str, float], weights: Mapping[str, float]) -> "LossReport":
        """Constrói o relatório recomputando o total em float de Python."""
        missing = sorted(set(terms) - set(weights))
        if missing:
            raise DataValidationError(f"Termos sem peso: {missing}")
        clean = {name: float(value) for name, value in terms.items()}
        total = math.fsum(float(weights[name]) * value for name, value in clean.items())
        return cls(step=step, terms=clean, weights={k: float(weights[k]) for k in clean}, total=total)

    def recomputed_total(self) -> float:
        return math.fsum(self.weights[name] * value for name, value in self.terms.items())

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LossReport":
        return cls(
            step=int(data["step"]),
            terms=dict(data["terms"]),
            weights=dict(data["weights"]),
            total=float(data["total"]),
        )


@dataclass
class EvalRow:
    """
    DTO: Uma linha do relatório de avaliação (detector × estratégia × condição).

    `ssim_mean` e `asr` ficam vazios quando não se aplicam à condição.
    """

    detector_id: str
    strategy: str
    condition: str  # "attack", "defense:<nome>" ou "cross_background"
    ap50_clean: float
    ap50_attacked: float
    ssim_mean: Optional[float] = None
    asr: Optional[float] = None
    latency_s_mean: Optional[float] = None
    latency_s_std: Optional[float] = None
    threshold: Optional[float] = None
    n_images: int = 0

    def __post_init__(self):
        for name in ("ap50_clean", "ap50_attacked", "asr"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise DataValidationError(f"{name} fora de [0, 1]: {value}")
        if self.ssim_mean is not None and not -1.0 <= self.ssim_mean <= 1.0:
            raise DataValidationError(f"ssim_mean fora de [-1, 1]: {self.ssim_mean}")

    @property
    def ap50_drop(self) -> float:
        """Queda de AP50 em pontos percentuais."""
        return 100.0 * (self.ap50_clean - self.ap50_attacked)


@dataclass
class EvalReport:
    """DTO: Linhas de avaliação e proveniência (hashes de configuração, checkpoints e corpus)."""

    rows: List[EvalRow] = field(default_factory=list)
    provenance: Dict[str, Any] = field(default_factory=dict)

    def extend(self, rows: Iterable[EvalRow]) -> None:
        self.rows.extend(rows)

    def to_dict(self) -> Dict[str, Any]:
        return {"rows": [asdict(r) for r in self.rows], "provenance": dict(self.provenance)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvalReport":
        known = {f.name for f in fields(EvalRow)}
        rows = [EvalRow(**{k: v for k, v in row.items() if k in known}) for row in data.get("rows", [])]
        return cls(rows=rows, provenance=dict(data.get("provenance", {})))


def write_jsonl(path: Path, items: Iterable[Mapping[str, Any]], append: bool = False) -> Path:
    """Grava um objeto JSON por linha."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a" if append else "w", encoding="utf-8") as handle:
        for item in items:
            handle.write(json.dumps(item, sort_keys=True) + "\n")
    return path


def read_jsonl(path: Path) -> Iterator[Dict[str, Any]]:
    """Lê um arquivo JSON lines (linhas vazias são ignoradas)."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise DataValidationError(f"JSON inválido em {path}:{number}: {e}") from e


__all__ = [
    "Detection",
    "DetectionSet",
    "TrainingResult",
    "LossReport",
    "EvalRow",
    "EvalReport",
    "write_jsonl",
    "read_jsonl",
]
