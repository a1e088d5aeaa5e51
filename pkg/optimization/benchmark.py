"""
Módulo de benchmark de ablação dos estágios de treino.

Compara, na mesma semente e no mesmo número total de iterações:
- dois estágios (sem caixa → caixa branca) vs um estágio: perda de estilo final na sonda
- estágio 2 completo vs apenas sem caixa: queda de AP50 do detector alvo
"""

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Sequence

from latent_camo.backend.denoiser import ConditionalDenoiser
from latent_camo.core.exceptions import NotReadyError
from latent_camo.core.interfaces import TrainingResult
from latent_camo.core.models import EvalRow
from latent_camo.domain.scene import SceneRecord
from latent_camo.optimization.base_trainer import PROBE_DIR, StageArtifacts, checkpoint_steps
from latent_camo.optimization.factory import TrainerFactory
from latent_camo.utils.config import RunConfig
from latent_camo.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class AblationComparison:
    """Uma comparação direcional entre uma linha de base e uma variante."""

    name: str
    baseline: str
    variant: str
    baseline_value: float
    variant_value: float
    expectation: str
    holds: bool
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class BenchmarkResult:
    """Resultado completo do benchmark."""

    comparisons: List[AblationComparison] = field(default_factory=list)
    training_results: Dict[str, TrainingResult] = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.comparisons)


def final_probe(run_dir: Path) -> Dict[str, Any]:
    """
    Métricas da sonda no último checkpoint de uma execução.

    Raises:
        NotReadyError: Execução sem checkpoints ou sem sonda
    """
    steps = checkpoint_steps(run_dir)
    if not steps:
        raise NotReadyError(f"Execução sem checkpoints: {run_dir}")
    path = Path(run_dir) / PROBE_DIR / f"step_{steps[-1]}.json"
    if not path.exists():
        raise NotReadyError(f"Sonda ausente: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


class AblationBenchmark:
    """
    Executa e compara as configurações pareadas da ablação.

    Exemplo:
        benchmark = AblationBenchmark(run_config)
        result = benchmark.run_stage_ablation(records, artifacts, out_dir)
    """

    def __init__(self, run_config: RunConfig, show_progress: bool = False):
        self.run_config = run_config
        self.show_progress = show_progress

    def run_stage_ablation(
        self,
        records: Sequence[SceneRecord],
        artifacts: StageArtifacts,
        out_dir: Path,
    ) -> BenchmarkResult:
        """
        Treina sem caixa → caixa branca e um estágio com o total de iterações
        dos dois, e compara a perda de estilo final na sonda.

        `artifacts` deve conter o detector alvo; o modelo do estágio 1 é
        substituído pelo treinado aqui.
        """
        out_dir = Path(out_dir)
        cfg = self.run_config
        result = BenchmarkResult()

        logger.info("Ablação: treinando sem caixa")
        no_box = TrainerFactory.create("no_box", cfg, artifacts, self.show_progress).train(
            records, out_dir / "two_stage" / "stage1"
        )
        result.training_results["no_box"] = no_box

        stage1 = ConditionalDenoiser.load(no_box.checkpoint_dir)
        logger.info("Ablação: treinando caixa branca")
        white_box = TrainerFactory.create(
            "white_box", cfg, replace(artifacts, stage1_model=stage1), self.show_progress
        ).train(records, out_dir / "two_stage" / "stage2")
        result.training_results["white_box"] = white_box

        total = cfg.stage1.iterations + cfg.stage2.iterations
        data = cfg.to_dict()
        data["onestage"]["iterations"] = total
        one_stage_cfg = RunConfig.from_dict(data)
        logger.info(f"Ablação: treinando um estágio ({total} iterações)")
        one_stage = TrainerFactory.create("one_stage", one_stage_cfg, artifacts, self.show_progress).train(
            records, out_dir / "one_stage"
        )
        result.training_results["one_stage"] = one_stage

        result.comparisons.append(self.compare_style(white_box.run_dir, one_stage.run_dir))
        self.export(result, out_dir / "ablation.json")
        return result

    def compare_style(self, two_stage_dir: Path, one_stage_dir: Path) -> AblationComparison:
        """Um estágio deve terminar com perda de estilo estritamente maior na sonda."""
        two = final_probe(two_stage_dir)
        one = final_probe(one_stage_dir)
        if two.get("style") is None or one.get("style") is None:
            raise NotReadyError("Perda de estilo indisponível na sonda de alguma execução")
        comparison = AblationComparison(
            name="style_two_stage_vs_one_stage",
            baseline="two_stage",
            variant="one_stage",
            baseline_value=float(two["style"]),
            variant_value=float(one["style"]),
            expectation="variant > baseline",
            holds=float(one["style"]) > float(two["style"]),
        )
        logger.info(
            f"Estilo final: dois estágios {comparison.baseline_value:.5f}, "
            f"um estágio {comparison.variant_value:.5f} ({'ok' if comparison.holds else 'violado'})"
        )
        return comparison

    def compare_adversarial(
        self, full_row: EvalRow, no_box_row: EvalRow, min_gap_points: float = 15.0
    ) -> AblationComparison:
        """Sem L_adv a queda de AP50 deve ser ao menos `min_gap_points` menor que no estágio 2."""
        gap = full_row.ap50_drop - no_box_row.ap50_drop
        comparison = AblationComparison(
            name="ap50_drop_white_box_vs_no_box",
            baseline="white_box",
            variant="no_box",
            baseline_value=full_row.ap50_drop,
            variant_value=no_box_row.ap50_drop,
            expectation=f"baseline - variant >= {min_gap_points}",
            holds=gap >= min_gap_points,
            details={"gap_points": gap, "detector_id": full_row.detector_id},
        )
        logger.info(
            f"Queda de AP50: caixa branca {full_row.ap50_drop:.1f} pp, sem caixa "
            f"{no_box_row.ap50_drop:.1f} pp (diferença {gap:.1f})"
        )
        return comparison

    def export(self, result: BenchmarkResult, output_file: Path) -> Path:
        """Exporta as comparações para JSON."""
        data: Dict[str, Any] = {
            "all_hold": result.all_hold,
            "comparisons": [asdict(c) for c in result.comparisons],
            "training": {
                name: {"run_dir": str(r.run_dir), "checkpoint_dir": str(r.checkpoint_dir), "steps": r.steps}
                for name, r in result.training_results.items()
            },
        }
        output_file = Path(output_file)
        output_file.parent.mkdir(parents=True, exist_ok=True)
        output_file.write_text(json.dumps(data, indent=2, ensure_ascii=False), encoding="utf-8")
        logger.info(f"Resultados da ablação exportados para: {output_file}")
        return output_file
