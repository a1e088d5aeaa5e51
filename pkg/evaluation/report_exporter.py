"""
Exportador de Relatórios.

Gera o relatório de avaliação em JSON e em tabela de texto alinhada
(colunas na ordem: detector, estratégia, condição, AP50 limpo, AP50 atacado,
queda, SSIM, ASR, latência).
"""

import json
from pathlib import Path
from typing import List

import pandas as pd

from latent_camo.core.exceptions import NotReadyError
from latent_camo.core.models import EvalReport, EvalRow

TABLE_COLUMNS = [
    "Detector",
    "Estratégia",
    "Condição",
    "AP50 limpo",
    "AP50 atacado",
    "Queda (pp)",
    "SSIM",
    "ASR",
    "Latência (s)",
    "N",
]


def _percent(value) -> str:
    return "-" if value is None else f"{100.0 * value:.1f}"


def _plain(value, digits: int = 3) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


class ReportExporter:
    """Exporta relatórios de avaliação em JSON e texto."""

    def to_frame(self, report: EvalReport) -> pd.DataFrame:
        """Tabela formatada (AP50, queda e ASR em pontos percentuais)."""
        rows: List[dict] = []
        for row in report.rows:
            latency = "-"
            if row.latency_s_mean is not None:
                latency = f"{row.latency_s_mean:.3f} ± {row.latency_s_std or 0.0:.3f}"
            rows.append(
                {
                    "Detector": row.detector_id,
                    "Estratégia": row.strategy,
                    "Condição": row.condition,
                    "AP50 limpo": _percent(row.ap50_clean),
                    "AP50 atacado": _percent(row.ap50_attacked),
                    "Queda (pp)": f"{row.ap50_drop:.1f}",
                    "SSIM": _plain(row.ssim_mean),
                    "ASR": _percent(row.asr),
                    "Latência (s)": latency,
                    "N": row.n_images,
                }
            )
        return pd.DataFrame(rows, columns=TABLE_COLUMNS)

    def render_table(self, report: EvalReport) -> str:
        """Tabela de texto alinhada."""
        if not report.rows:
            return "(relatório vazio)\n"
        return self.to_frame(report).to_string(index=False) + "\n"

    def export_json(self, report: EvalReport, output_path: Path) -> str:
        """
        Exporta o relatório completo (linhas + proveniência) em JSON.

        Returns:
            Caminho do arquivo gerado
        """
        output_file = Path(output_path)
        output_file.parent.mkdir(parents=True, exist_ok=True)
        output_file.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        return str(output_file.absolute())

    def export_table(self, report: EvalReport, output_path: Path) -> str:
        """Exporta a tabela de texto. Returns: caminho do arquivo gerado."""
        output_file = Path(output_path)
        output_file.parent.mkdir(parents=True, exist_ok=True)
        output_file.write_text(self.render_table(report), encoding="utf-8")
        return str(output_file.absolute())


def load_report(path: Path) -> EvalReport:
    """
    Lê um relatório gravado por `ReportExporter.export_json`.

    Raises:
        NotReadyError: Arquivo ausente
    """
    path = Path(path)
    if not path.exists():
        raise NotReadyError(f"Relatório não encontrado: {path}")
    return EvalReport.from_dict(json.loads(path.read_text(encoding="utf-8")))


def _row_key(row: EvalRow) -> tuple:
    return (row.detector_id, row.strategy, row.condition)


def merge_reports(base: EvalReport, extra: EvalReport) -> EvalReport:
    """Substitui linhas de mesma (detector, estratégia, condição) e acrescenta as novas."""
    replaced = {_row_key(r) for r in extra.rows}
    merged = EvalReport(rows=[r for r in base.rows if _row_key(r) not in replaced], provenance=dict(base.provenance))
    merged.rows.extend(extra.rows)
    merged.provenance.update(extra.provenance)
    return merged
