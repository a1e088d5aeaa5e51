"""Testes do relatório de avaliação e da sua exportação."""

import json

import pytest

from latent_camo.core.exceptions import DataValidationError, NotReadyError
from latent_camo.core.models import EvalReport, EvalRow
from latent_camo.evaluation.report_exporter import TABLE_COLUMNS, ReportExporter, load_report, merge_reports


def _row(detector: str = "narrow_deep", condition: str = "attack", **overrides) -> EvalRow:
    params = dict(
        detector_id=detector,
        strategy="image_level",
        condition=condition,
        ap50_clean=0.6,
        ap50_attacked=0.1,
        ssim_mean=0.8123,
        asr=None,
        latency_s_mean=0.5,
        latency_s_std=0.1,
        threshold=0.4,
        n_images=3,
    )
    params.update(overrides)
    return EvalRow(**params)


@pytest.fixture
def report() -> EvalReport:
    return EvalReport(rows=[_row(), _row("wide_shallow", asr=0.25)], provenance={"config": "c0ffee"})


class TestEvalRow:
    def test_drop_in_points(self):
        assert _row().ap50_drop == pytest.approx(50.0)

    def test_ap_out_of_range(self):
        with pytest.raises(DataValidationError):
            _row(ap50_attacked=1.2)

    def test_ssim_out_of_range(self):
        with pytest.raises(DataValidationError):
            _row(ssim_mean=-1.5)

    def test_from_dict_ignores_unknown_fields(self, report):
        data = report.to_dict()
        data["rows"][0]["ap50_drop"] = 50.0
        assert EvalReport.from_dict(data).rows == report.rows


class TestReportExporter:
    def test_frame_formatting(self, report):
        frame = ReportExporter().to_frame(report)
        assert list(frame.columns) == TABLE_COLUMNS
        first = frame.iloc[0]
        assert first["AP50 limpo"] == "60.0"
        assert first["AP50 atacado"] == "10.0"
        assert first["Queda (pp)"] == "50.0"
        assert first["SSIM"] == "0.812"
        assert first["ASR"] == "-"
        assert first["Latência (s)"] == "0.500 ± 0.100"
        assert frame.iloc[1]["ASR"] == "25.0"

    def test_missing_latency(self):
        frame = ReportExporter().to_frame(EvalReport(rows=[_row(latency_s_mean=None, latency_s_std=None)]))
        assert frame.iloc[0]["Latência (s)"] == "-"

    def test_empty_table(self):
        assert ReportExporter().render_table(EvalReport()) == "(relatório vazio)\n"

    def test_table_lists_every_row(self, report, tmp_path):
        path = ReportExporter().export_table(report, tmp_path / "out" / "report.txt")
        lines = (tmp_path / "out" / "report.txt").read_text(encoding="utf-8").splitlines()
        assert path.endswith("report.txt")
        assert len(lines) == 3
        assert "narrow_deep" in lines[1] and "wide_shallow" in lines[2]

    def test_json_round_trip(self, report, tmp_path):
        ReportExporter().export_json(report, tmp_path / "report.json")
        data = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert data["provenance"] == {"config": "c0ffee"}
        loaded = load_report(tmp_path / "report.json")
        assert loaded.rows == report.rows

    def test_missing_report(self, tmp_path):
        with pytest.raises(NotReadyError):
            load_report(tmp_path / "report.json")


class TestMergeReports:
    def test_replaces_matching_rows(self):
        base = EvalReport(rows=[_row(), _row(condition="defense:nlm")], provenance={"config": "a"})
        extra = EvalReport(
            rows=[_row(ap50_attacked=0.3), _row("wide_shallow")], provenance={"checkpoint": "b"}
        )
        merged = merge_reports(base, extra)
        assert [(r.detector_id, r.condition) for r in merged.rows] == [
            ("narrow_deep", "defense:nlm"),
            ("narrow_deep", "attack"),
            ("wide_shallow", "attack"),
        ]
        assert merged.rows[1].ap50_attacked == 0.3
        assert merged.provenance == {"config": "a", "checkpoint": "b"}

    def test_base_unchanged(self):
        base = EvalReport(rows=[_row()], provenance={"config": "a"})
        merge_reports(base, EvalReport(rows=[_row(ap50_attacked=0.3)], provenance={"config": "b"}))
        assert base.rows[0].ap50_attacked == 0.1 and base.provenance == {"config": "a"}
