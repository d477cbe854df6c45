"""CLI: ingestion formats, command output, exit codes, determinism."""

import csv
import io
import json

import pytest

from stratmean.cli import ingest, main
from stratmean.errors import (
    CorrelationOutOfRange,
    DegenerateStratum,
    ParseError,
    SchemaError,
)

SUMMARY_DOC = {
    "label": "demo",
    "known_mean_x": 326.0,
    "strata": [
        {"N": 6, "n": 3, "mean_y": 135.0, "mean_x": 366.666,
         "var_y": 80.0, "var_x": 2706.666, "rho": 0.9455626},
        {"N": 12, "n": 4, "mean_y": 99.166, "mean_x": 310.883,
         "var_y": 226.515, "var_x": 1881.06, "cov_xy": 618.93},
    ],
}


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestIngest:
    def test_embedded_ids(self):
        d = ingest("paper-1")
        assert d.N == 25 and d.n == 10 and len(d.strata) == 3
        d2 = ingest("paper-2")
        assert d2.N == 4201 and d2.n == 25

    def test_summary_json_mixed_parameterizations(self, tmp_path):
        path = tmp_path / "d.json"
        path.write_text(json.dumps(SUMMARY_DOC))
        d = ingest(str(path), "summary-json")
        assert d.label == "demo"
        assert d.strata[0].cov_xy == pytest.approx(
            0.9455626 * (2706.666 * 80.0) ** 0.5, rel=1e-12
        )
        assert d.strata[1].cov_xy == 618.93

    def test_summary_json_both_cov_and_rho(self, tmp_path):
        doc = json.loads(json.dumps(SUMMARY_DOC))
        doc["strata"][0]["cov_xy"] = 100.0  # rho already present
        path = tmp_path / "d.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError):
            ingest(str(path), "summary-json")

    def test_summary_json_neither_cov_nor_rho(self, tmp_path):
        doc = json.loads(json.dumps(SUMMARY_DOC))
        del doc["strata"][0]["rho"]
        path = tmp_path / "d.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError):
            ingest(str(path), "summary-json")

    def test_summary_json_rho_out_of_range(self, tmp_path):
        doc = json.loads(json.dumps(SUMMARY_DOC))
        doc["strata"][0]["rho"] = 1.2
        path = tmp_path / "d.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(CorrelationOutOfRange):
            ingest(str(path), "summary-json")

    def test_summary_json_malformed(self, tmp_path):
        path = tmp_path / "d.json"
        path.write_text("{not json")
        with pytest.raises(ParseError) as err:
            ingest(str(path), "summary-json")
        assert "line" in str(err.value)

    def write_microdata(self, tmp_path, rows, sizes):
        path = tmp_path / "micro.csv"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["stratum", "y", "x"])
        writer.writerows(rows)
        path.write_text(buf.getvalue())
        (tmp_path / "micro.csv.n.json").write_text(json.dumps(sizes))
        return str(path)

    def test_microdata_roundtrip(self, tmp_path):
        rows = [
            (1, 1.0, 2.0), (1, 3.0, 6.0), (1, 2.0, 4.0),
            (2, 5.0, 1.0), (2, 7.0, 3.0),
        ]
        path = self.write_microdata(tmp_path, rows, {"1": 2, "2": 1})
        d = ingest(path, "microdata-csv")
        assert [s.N for s in d.strata] == [3, 2]
        assert [s.n for s in d.strata] == [2, 1]
        assert d.strata[0].mean_y == 2.0

    def test_microdata_singleton_stratum(self, tmp_path):
        rows = [(1, 1.0, 2.0), (2, 5.0, 1.0), (2, 7.0, 3.0)]
        path = self.write_microdata(tmp_path, rows, {"1": 1, "2": 1})
        with pytest.raises(DegenerateStratum):
            ingest(path, "microdata-csv")

    def test_microdata_bad_row_reports_line(self, tmp_path):
        rows = [(1, 1.0, 2.0), (1, "oops", 4.0), (1, 2.0, 4.0)]
        path = self.write_microdata(tmp_path, rows, {"1": 2})
        with pytest.raises(ParseError) as err:
            ingest(path, "microdata-csv")
        assert "line 3" in str(err.value)

    def test_microdata_missing_sidecar(self, tmp_path):
        path = tmp_path / "micro.csv"
        path.write_text("stratum,y,x\n1,1.0,2.0\n1,2.0,3.0\n")
        with pytest.raises(SchemaError):
            ingest(str(path), "microdata-csv")


class TestCommands:
    def test_moments_text(self, capsys):
        code, out, err = run_cli(capsys, "moments", "--data", "paper-1")
        assert code == 0 and err == ""
        assert "var_ybar" in out and "11.2617" in out and "0.314723" in out

    def test_moments_json_ratio(self, capsys):
        code, out, _ = run_cli(
            capsys, "moments", "--data", "paper-2", "--output-format", "json"
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["rows"][0]["ratio"] == pytest.approx(49.03, rel=1e-3)

    def test_table_paper1(self, capsys):
        code, out, _ = run_cli(capsys, "table", "--data", "paper-1")
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 10  # header + 9 rows
        assert lines[1].startswith("t1") and "2.78701" in lines[1]
        assert lines[-1].startswith("unbiased") and "100" in lines[-1]

    def test_table_csv_schema(self, capsys):
        code, out, _ = run_cli(
            capsys, "table", "--data", "paper-1", "--output-format", "csv"
        )
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["estimator", "mse", "pre", "k1", "k2", "w", "p", "a", "b", "bias"]
        assert len(rows) == 10

    def test_table_paper_layout(self, capsys):
        code, out, _ = run_cli(capsys, "table", "--paper-layout")
        assert code == 0
        assert "mse_data1" in out and "layout note" in out
        # the Data-1 column carries the orchard-survey (paper-2) numbers
        t1_line = next(l for l in out.splitlines() if l.startswith("t1"))
        assert "702.137" in t1_line and "2.78701" in t1_line

    def test_estimate_with_explicit_constants(self, capsys):
        code, out, _ = run_cli(
            capsys, "estimate", "--data", "paper-1",
            "--estimators", "t1", "--w", "1",
            "--ybar-st", "100", "--xbar-st", "330",
        )
        assert code == 0
        assert "98.773" in out

    def test_estimate_optimal_resolves_constants(self, capsys):
        code, out, _ = run_cli(
            capsys, "estimate", "--data", "paper-1",
            "--estimators", "t5", "--optimal",
            "--ybar-st", "100", "--xbar-st", "330",
            "--output-format", "json",
        )
        assert code == 0
        row = json.loads(out)["rows"][0]
        assert row["w"] == pytest.approx(0.777927, rel=1e-4)
        assert row["k1"] is not None and row["estimate"] is not None

    def test_mse_command(self, capsys):
        code, out, _ = run_cli(
            capsys, "mse", "--data", "paper-1",
            "--estimators", "t1", "--w", "1", "--output-format", "json",
        )
        assert code == 0
        row = json.loads(out)["rows"][0]
        assert row["mse"] == pytest.approx(3.47763, rel=1e-4)

    def test_optimize_command(self, capsys):
        code, out, _ = run_cli(
            capsys, "optimize", "--data", "paper-2",
            "--estimators", "t1,t2", "--output-format", "json",
        )
        assert code == 0
        rows = json.loads(out)["rows"]
        assert rows[0]["mse"] == pytest.approx(702.137, rel=1e-4)
        assert rows[0]["mse"] == rows[1]["mse"]

    def test_full_precision_roundtrip(self, capsys):
        code, out, _ = run_cli(
            capsys, "moments", "--data", "paper-1",
            "--output-format", "json", "--full-precision",
        )
        payload = json.loads(out)
        assert payload["rows"][0]["var_ybar"] == 11.261730133333334

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "report.csv"
        code, out, _ = run_cli(
            capsys, "table", "--data", "paper-1",
            "--output-format", "csv", "--out", str(target),
        )
        assert code == 0 and out == ""
        assert target.read_text().startswith("estimator,")


class TestSimulate:
    def test_byte_identical_runs(self, capsys):
        argv = ("simulate", "--data", "paper-1", "--reps", "1000", "--seed", "7",
                "--estimators", "unbiased,ratio")
        code1, out1, _ = run_cli(capsys, *argv)
        code2, out2, _ = run_cli(capsys, *argv)
        assert code1 == code2 == 0
        assert out1 == out2

    def test_workers_do_not_change_output(self, capsys):
        base = ("simulate", "--data", "paper-1", "--reps", "9000", "--seed", "5",
                "--estimators", "t1", "--w", "1")
        _, out1, _ = run_cli(capsys, *base, "--workers", "1")
        _, out4, _ = run_cli(capsys, *base, "--workers", "4")
        assert out1 == out4

    def test_verdict_columns_present(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--data", "paper-1", "--reps", "2000",
            "--seed", "3", "--estimators", "unbiased",
        )
        assert code == 0
        assert "# policy:" in out and "verdict" in out

    def test_strict_fails_on_insufficient_reps(self, capsys):
        # below the verdict threshold every row is insufficient-replications,
        # which strict mode must treat as failure
        code, out, err = run_cli(
            capsys, "simulate", "--data", "paper-1", "--reps", "200",
            "--seed", "3", "--estimators", "unbiased", "--strict",
        )
        assert code == 5
        assert "insufficient-replications" in out


class TestExitCodes:
    def test_unknown_dataset(self, capsys):
        code, out, err = run_cli(capsys, "moments", "--data", "paper-9")
        assert code == 3
        assert err.startswith("error:unknown-dataset:")

    def test_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "moments")  # missing --data
        assert code == 2

    def test_unknown_estimator(self, capsys):
        code, _, err = run_cli(
            capsys, "mse", "--data", "paper-1", "--estimators", "t9"
        )
        assert code == 3
        assert err.startswith("error:schema:")

    def test_validation_error_exit(self, capsys, tmp_path):
        doc = json.loads(json.dumps(SUMMARY_DOC))
        doc["strata"][0]["rho"] = 1.2
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, _, err = run_cli(capsys, "moments", "--data", str(path))
        assert code == 3
        assert err.startswith("error:correlation-out-of-range:")

    def test_computation_error_exit(self, capsys):
        # T1 with fractional w demands a positive power base; xbar < 0 fails
        code, _, err = run_cli(
            capsys, "estimate", "--data", "paper-1", "--estimators", "t1",
            "--w", "0.5", "--ybar-st", "100", "--xbar-st", "-5",
        )
        assert code == 4
        assert err.startswith("error:non-positive-base:")

    def test_error_lines_are_single_line(self, capsys):
        code, _, err = run_cli(capsys, "moments", "--data", "paper-9")
        assert err.count("\n") == 1 and err.endswith("\n")
