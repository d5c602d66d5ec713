import csv
import io
import math

import pytest

from reggeshell.bench import (
    CSV_COLUMNS,
    BenchmarkConfig,
    ResultTable,
    _render_svg,
    emit_table,
    run_benchmark,
)
from reggeshell.geometry import ConfigurationError


def sample_row(**overrides):
    row = dict(
        benchmark="cylinder", t=0.01, level=1, n_elements=32, n_dofs=450,
        reduction="on", value=1.25e-6, reference=1.3e-6,
        rel_error=abs(1.25e-6 - 1.3e-6) / 1.3e-6, newton_iters=1,
    )
    row.update(overrides)
    return row


class TestResultTable:
    def test_empty_table_is_header_only(self):
        assert ResultTable().to_csv() == ",".join(CSV_COLUMNS) + "\n"

    def test_row_round_trips_through_csv(self):
        table = ResultTable()
        table.add(**sample_row())
        parsed = list(csv.DictReader(io.StringIO(table.to_csv())))
        assert len(parsed) == 1
        rec = parsed[0]
        assert rec["benchmark"] == "cylinder"
        assert float(rec["t"]) == 0.01
        assert int(rec["level"]) == 1
        assert float(rec["value"]) == pytest.approx(1.25e-6, rel=1e-12)
        assert rec["reduction"] == "on"

    def test_failed_solve_renders_as_nan(self):
        table = ResultTable()
        table.add(**sample_row(value=math.nan, rel_error=math.nan))
        line = table.to_csv().splitlines()[1]
        assert ",nan," in line and line.endswith("nan,1")


class TestSvg:
    def make_table(self):
        table = ResultTable()
        for t in (0.1, 0.001):
            for level in (0, 1, 2):
                table.add(**sample_row(t=t, level=level,
                                       rel_error=0.1 / (level + 1) * t))
        return table

    def test_one_polyline_per_thickness(self):
        svg = _render_svg(self.make_table())
        assert svg.count("<polyline") == 2
        assert svg.count("<text") == 2

    def test_nan_rows_are_skipped(self):
        table = self.make_table()
        table.add(**sample_row(t=0.01, rel_error=math.nan))
        assert _render_svg(table).count("<polyline") == 2

    def test_empty_table_still_valid_svg(self):
        svg = _render_svg(ResultTable())
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


class TestEmit:
    def test_csv_file_written(self, tmp_path):
        table = ResultTable()
        table.add(**sample_row())
        out = tmp_path / "result.csv"
        emit_table(table, str(out), "csv")
        assert out.read_text() == table.to_csv()

    def test_svg_file_written(self, tmp_path):
        out = tmp_path / "result.svg"
        emit_table(ResultTable(), str(out), "svg")
        assert out.read_text().startswith("<svg")

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_table(ResultTable(), str(tmp_path / "x"), "pdf")


class TestConfig:
    def test_unknown_benchmark_rejected(self):
        with pytest.raises(ConfigurationError):
            BenchmarkConfig("moebius_strip")

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ConfigurationError):
            BenchmarkConfig("cylinder", thicknesses=(0.1, -0.5))
        with pytest.raises(ConfigurationError):
            BenchmarkConfig("cylinder", levels=0)
        with pytest.raises(ConfigurationError):
            BenchmarkConfig("cylinder", order=0)

    def test_base_refinement_defaults(self):
        # the cylinder starts one level finer than its 8-element grid
        assert BenchmarkConfig("cylinder").base_refinement == 1
        assert BenchmarkConfig("hyperboloid").base_refinement == 0
        assert BenchmarkConfig("cylinder", base_refinement=0).base_refinement == 0


class TestRun:
    def test_small_run_table_shape(self):
        config = BenchmarkConfig(
            "unibend_cylinder", thicknesses=(0.01, 0.001), levels=1,
            order=1, reference_order=2,
        )
        table = run_benchmark(config)
        assert len(table.rows) == 2
        for row in table.rows:
            assert row["reduction"] == "on"
            assert row["n_elements"] == 16
            assert row["rel_error"] < 0.3
