import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from mimobc.cli import main
from mimobc.config import load_config, parse_grid
from mimobc.errors import ConfigurationError


def read_csv(path):
    with open(path, encoding="utf-8") as handle:
        lines = [line for line in handle.read().splitlines() if not line.startswith("#")]
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    return header, body


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


class TestConfig:
    def test_grid_string_parsing(self):
        assert parse_grid("0:5:20") == (0.0, 5.0, 10.0, 15.0, 20.0)
        assert parse_grid([1, 2, 7.5]) == (1.0, 2.0, 7.5)

    def test_grid_rejections(self):
        with pytest.raises(ConfigurationError):
            parse_grid("0:0:20")
        with pytest.raises(ConfigurationError):
            parse_grid("20:5:0")
        with pytest.raises(ConfigurationError):
            parse_grid([3.0, 2.0])
        with pytest.raises(ConfigurationError):
            parse_grid([])

    def test_unknown_keys_rejected(self, tmp_path):
        path = write_config(tmp_path / "c.json", {"trails": 5})
        with pytest.raises(ConfigurationError, match="trails"):
            load_config("table1", path)

    def test_kind_mismatch_rejected(self, tmp_path):
        path = write_config(tmp_path / "c.json", {"experiment": "curves"})
        with pytest.raises(ConfigurationError, match="curves"):
            load_config("table1", path)

    def test_flag_overrides_file(self, tmp_path):
        path = write_config(tmp_path / "c.json", {"seed": 3, "trials": 7})
        config = load_config("rate-loss", path, {"seed": 9, "trials": None})
        assert config.seed == 9
        assert config.trials == 7

    def test_negative_tolerance_rejected(self, tmp_path):
        path = write_config(tmp_path / "c.json", {"tolerance": -1e-8})
        with pytest.raises(ConfigurationError, match="tolerance"):
            load_config("curves", path)

    def test_defaults_per_kind(self):
        assert load_config("table1").trials == 0
        assert load_config("rate-loss").trials == 1000
        assert load_config("curves").trials == 200


class TestTable1Command:
    def test_reference_cells_and_empty_cells(self, tmp_path):
        out = tmp_path / "table.csv"
        assert main(["table1", "--out", str(out)]) == 0
        header, body = read_csv(out)
        assert header == ["profile", "N", "closed_form_bits", "mc_mean_bits", "mc_stderr"]
        values = {(row[0], row[1]): row[2] for row in body}
        assert float(values[("1,1,1,1,1", "5")]) == pytest.approx(9.257, abs=5e-4)
        assert float(values[("2,2", "4")]) == pytest.approx(3.366, abs=5e-4)
        # infeasible cells are present but empty
        assert values[("1,1,1", "2")] == ""
        assert len(body) == 65

    def test_monte_carlo_columns(self, tmp_path):
        out = tmp_path / "table.csv"
        assert main(["table1", "--out", str(out), "--trials", "400", "--seed", "2"]) == 0
        _, body = read_csv(out)
        checked = 0
        for row in body:
            if row[2] == "":
                assert row[3] == "" and row[4] == ""
                continue
            mean, stderr = float(row[3]), float(row[4])
            assert abs(mean - float(row[2])) < 4 * stderr
            checked += 1
        assert checked == 32

    def test_json_format(self, tmp_path):
        out = tmp_path / "table.json"
        assert main(["table1", "--out", str(out), "--format", "json"]) == 0
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == "1"
        assert payload["experiment"] == "table1"
        assert len(payload["rows"]) == 65

    def test_extra_profiles(self, tmp_path):
        config = write_config(
            tmp_path / "c.json", {"extra_profiles": [{"N": 8, "antennas": [2, 2, 2]}]}
        )
        out = tmp_path / "table.csv"
        assert main(["table1", "--config", config, "--out", str(out)]) == 0
        _, body = read_csv(out)
        assert body[-1][0] == "2,2,2"
        assert body[-1][1] == "8"
        assert len(body) == 66


class TestRateLossCommand:
    def test_single_user_has_zero_loss(self, tmp_path):
        config = write_config(tmp_path / "c.json", {"N": 4, "antennas": [3]})
        out = tmp_path / "loss.csv"
        assert main(["rate-loss", "--config", config, "--out", str(out), "--trials", "50"]) == 0
        header, body = read_csv(out)
        assert header[:4] == ["trial", "seed", "status", "rate_loss_bits"]
        assert len(body) == 50
        for row in body:
            assert row[2] == "ok"
            assert abs(float(row[3])) < 1e-10

    def test_mean_matches_closed_form(self, tmp_path):
        config = write_config(tmp_path / "c.json", {"N": 5, "antennas": [2, 2]})
        out = tmp_path / "loss.csv"
        assert main(["rate-loss", "--config", config, "--out", str(out), "--trials", "600"]) == 0
        _, body = read_csv(out)
        losses = np.array([float(row[3]) for row in body])
        stderr = losses.std(ddof=1) / np.sqrt(len(losses))
        assert abs(losses.mean() - 2.0438179745) < 3 * stderr

    def test_byte_identical_reruns(self, tmp_path):
        config = write_config(
            tmp_path / "c.json", {"N": 5, "antennas": [2, 2], "correlation": {"scalars": [1, 2]}}
        )
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        for out in (first, second):
            assert main(
                ["rate-loss", "--config", config, "--out", str(out), "--trials", "20"]
            ) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_missing_profile_is_a_config_error(self, tmp_path):
        out = tmp_path / "loss.csv"
        assert main(["rate-loss", "--out", str(out), "--trials", "5"]) == 2


class TestCurvesCommand:
    def test_reference_setup_columns_and_monotonicity(self, tmp_path):
        config = write_config(
            tmp_path / "c.json",
            {"N": 5, "antennas": [2, 2], "correlation": {"scalars": [1.0, 2.0]}},
        )
        out = tmp_path / "curves.csv"
        assert main(
            ["curves", "--config", config, "--out", str(out),
             "--trials", "25", "--ptx-grid-db", "0:10:40", "--seed", "4"]
        ) == 0
        header, body = read_csv(out)
        assert header == [
            "P_dB", "dpc_exact", "linear_exact", "dpc_affine", "linear_affine",
            "dpc_stderr", "linear_stderr", "nonconverged",
        ]
        table = np.array([[float(cell) for cell in row] for row in body])
        for column in range(1, 5):
            assert np.all(np.diff(table[:, column]) > 0)
        # affine columns are exact affine functions of the dB grid
        slope = 4 * np.log2(10.0) / 10.0
        for column in (3, 4):
            np.testing.assert_allclose(np.diff(table[:, column]), 10.0 * slope, atol=1e-9)
        assert np.all(table[:, 1] >= table[:, 2] - 1e-9)

    def test_gap_near_reference_value(self, tmp_path):
        config = write_config(
            tmp_path / "c.json",
            {"N": 5, "antennas": [2, 2], "correlation": {"scalars": [1.0, 2.0]}},
        )
        out = tmp_path / "curves.csv"
        assert main(
            ["curves", "--config", config, "--out", str(out),
             "--trials", "60", "--ptx-grid-db", "40:5:40", "--seed", "16"]
        ) == 0
        _, body = read_csv(out)
        gap = float(body[0][1]) - float(body[0][2])
        assert gap == pytest.approx(2.04, abs=0.4)


class TestValidateCommand:
    def test_default_properties_pass(self, tmp_path):
        out = tmp_path / "validate.csv"
        code = main(["validate", "--out", str(out), "--trials", "300", "--seed", "1"])
        header, body = read_csv(out)
        assert header == ["property", "passed", "margin", "detail"]
        failed = [row for row in body if row[1] != "true"]
        assert code == 0, failed
        assert len(body) >= 20

    def test_validate_json_report(self, tmp_path):
        out = tmp_path / "validate.json"
        code = main(
            ["validate", "--out", str(out), "--trials", "300", "--seed", "1",
             "--format", "json"]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert all(row["passed"] for row in payload["rows"])


class TestExitCodes:
    def test_config_error_exit_code(self, tmp_path):
        bad = write_config(tmp_path / "c.json", {"format": "xml"})
        assert main(["table1", "--config", bad]) == 2

    def test_negative_tolerance_exit_code(self, tmp_path):
        bad = write_config(tmp_path / "c.json", {"tolerance": -1.0})
        assert main(["curves", "--config", bad]) == 2

    def test_unreadable_config(self, tmp_path):
        assert main(["table1", "--config", str(tmp_path / "missing.json")]) == 2

    def test_infeasible_profile(self, tmp_path):
        config = write_config(tmp_path / "c.json", {"N": 3, "antennas": [2, 2]})
        assert main(["rate-loss", "--config", config, "--trials", "2",
                     "--out", str(tmp_path / "x.csv")]) == 2


class TestModuleEntryPoint:
    def test_runs_as_a_module(self, tmp_path):
        out = tmp_path / "table.csv"
        completed = subprocess.run(
            [sys.executable, "-m", "mimobc", "table1", "--out", str(out)],
            capture_output=True,
            text=True,
        )
        assert completed.returncode == 0, completed.stderr
        assert out.exists()
        assert out.read_text().startswith("# schema_version=1\n")
