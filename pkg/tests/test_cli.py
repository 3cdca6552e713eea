"""End-to-end tests of the command-line interface."""

import json
import os

import numpy as np
import pytest

from paneldiag.cli import (EXIT_CONFIG, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK,
                           main)
from .conftest import make_panel_csv


@pytest.fixture
def data_files(tmp_path):
    text, schema = make_panel_csv(n=120, T=3, P=2, seed=21, drop_rate=0.15)
    data = tmp_path / "panel.csv"
    data.write_text(text)
    schema_path = tmp_path / "schema.json"
    schema_path.write_text(json.dumps(
        {"names": list(schema.names), "types": list(schema.types)}))
    return str(data), str(schema_path)


@pytest.fixture
def sim_config_file(tmp_path):
    path = tmp_path / "scenario.cfg"
    path.write_text("n_per_year = 200\nq = 0.0\nB = 30\nR = 4\nseed = 9\n")
    return str(path)


def _read_all(out_dir):
    out = {}
    for name in sorted(os.listdir(out_dir)):
        with open(os.path.join(out_dir, name), "rb") as fh:
            out[name] = fh.read()
    return out


class TestFit:
    def test_outputs_both_formats(self, data_files, tmp_path, capsys):
        data, schema = data_files
        out = str(tmp_path / "out")
        code = main(["fit", "--input", data, "--schema", schema,
                     "--out", out])
        assert code == EXIT_OK
        files = set(os.listdir(out))
        assert files == {"fits.csv", "fits.json", "summary.csv",
                         "summary.json"}
        fits = json.loads((tmp_path / "out" / "fits.json").read_text())
        assert len(fits) == 3
        assert fits[0]["coefficients"][0]["name"] == "Intercept"
        assert "fitted 3 years" in capsys.readouterr().out

    def test_format_filter(self, data_files, tmp_path):
        data, schema = data_files
        out = str(tmp_path / "only_json")
        main(["fit", "--input", data, "--schema", schema, "--out", out,
              "--format", "json"])
        assert set(os.listdir(out)) == {"fits.json", "summary.json"}


class TestTest:
    def test_report_contents(self, data_files, tmp_path, capsys):
        data, schema = data_files
        out = str(tmp_path / "report")
        code = main(["test", "--input", data, "--schema", schema,
                     "--out", out, "--b", "40", "--seed", "12",
                     "--workers", "1"])
        assert code == EXIT_OK
        report = json.loads((tmp_path / "report" / "report.json").read_text())
        assert report["B"] == 40 and report["seed"] == 12
        assert report["serial_aggregate"]["df"] == 2 * 3
        assert report["corr_aggregate"]["df"] == 3
        assert len(report["serial_pairwise"]) == 3
        assert len(report["corr_pairwise"]) == 3
        assert set(report["residual_correlations"]) == \
            {"1,2", "1,3", "2,3"}
        printed = capsys.readouterr().out
        assert "serial aggregate" in printed
        csv_names = {"serial_pairwise.csv", "corr_pairwise.csv",
                     "corr_values.csv"}
        assert csv_names <= set(os.listdir(out))
        # pairwise CSVs: T+1 header columns, empty diagonal
        lines = (tmp_path / "report" / "serial_pairwise.csv") \
            .read_text().strip().split("\n")
        assert len(lines) == 4
        assert lines[1].split(",")[1] == ""

    def test_byte_identical_across_runs_and_workers(self, data_files,
                                                    tmp_path):
        data, schema = data_files
        outputs = []
        for k, workers in enumerate(("1", "1", "4")):
            out = str(tmp_path / f"rep{k}")
            code = main(["test", "--input", data, "--schema", schema,
                         "--out", out, "--b", "30", "--seed", "5",
                         "--workers", workers])
            assert code == EXIT_OK
            outputs.append(_read_all(out))
        assert outputs[0] == outputs[1] == outputs[2]


class TestSimulate:
    def test_outputs(self, sim_config_file, tmp_path, capsys):
        out = str(tmp_path / "sim")
        code = main(["simulate", "--sim-config", sim_config_file,
                     "--out", out, "--workers", "1"])
        assert code == EXIT_OK
        assert set(os.listdir(out)) == {"runs.csv", "hist.csv",
                                        "summary.json"}
        summary = json.loads((tmp_path / "sim" / "summary.json").read_text())
        assert summary["R"] == 4
        assert summary["levels"] == [0.01, 0.05, 0.10]
        assert "rejection rates" in capsys.readouterr().out

    def test_seed_and_b_overrides_change_output(self, sim_config_file,
                                                tmp_path):
        out1 = str(tmp_path / "a")
        out2 = str(tmp_path / "b")
        main(["simulate", "--sim-config", sim_config_file, "--out", out1,
              "--workers", "1"])
        main(["simulate", "--sim-config", sim_config_file, "--out", out2,
              "--seed", "777", "--workers", "1"])
        a = (tmp_path / "a" / "runs.csv").read_bytes()
        b = (tmp_path / "b" / "runs.csv").read_bytes()
        assert a != b

    def test_byte_identical_across_runs_and_workers(self, sim_config_file,
                                                    tmp_path):
        outputs = []
        for k, workers in enumerate(("1", "1", "4")):
            out = str(tmp_path / f"sim{k}")
            code = main(["simulate", "--sim-config", sim_config_file,
                         "--out", out, "--workers", workers])
            assert code == EXIT_OK
            outputs.append(_read_all(out))
        assert outputs[0] == outputs[1] == outputs[2]


class TestErrorPaths:
    def test_missing_input_file(self, data_files, tmp_path, capsys):
        _, schema = data_files
        code = main(["fit", "--input", str(tmp_path / "nope.csv"),
                     "--schema", schema, "--out", str(tmp_path / "o")])
        assert code == EXIT_INPUT
        err = json.loads(capsys.readouterr().err)
        assert "error" in err

    def test_malformed_csv(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("subject_id,year,z,x1\na,2001,7,0.5\n")
        schema = tmp_path / "schema.json"
        schema.write_text(json.dumps({"names": ["x1"],
                                      "types": ["continuous"]}))
        code = main(["fit", "--input", str(bad), "--schema", str(schema),
                     "--out", str(tmp_path / "o")])
        assert code == EXIT_INPUT
        assert json.loads(capsys.readouterr().err)["error"] == "MalformedRow"

    def test_separation_maps_to_numerical_exit(self, tmp_path, capsys):
        lines = ["subject_id,year,z,x1"]
        for i, x in enumerate(np.linspace(-2, 2, 24)):
            lines.append(f"s{i},2001,{int(x > 0)},{float(x)!r}")
            lines.append(f"s{i},2002,{int(x > 0)},{float(x)!r}")
        data = tmp_path / "sep.csv"
        data.write_text("\n".join(lines) + "\n")
        schema = tmp_path / "schema.json"
        schema.write_text(json.dumps({"names": ["x1"],
                                      "types": ["continuous"]}))
        code = main(["fit", "--input", str(data), "--schema", str(schema),
                     "--out", str(tmp_path / "o")])
        assert code == EXIT_NUMERICAL
        assert json.loads(capsys.readouterr().err)["error"] == "Separation"

    def test_bad_sim_config(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n_per_year = 100\nq = 2.0\n")
        code = main(["simulate", "--sim-config", str(cfg),
                     "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG
        assert json.loads(capsys.readouterr().err)["error"] == "DomainError"
