import csv
import io
import json
import textwrap

import pytest

from splitenc.cli import main

GOLDEN_STATISTIC = 3.196545488539244  # frozen from the direct-formula oracle


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _table_body(stdout: str) -> str:
    """Everything after the config-echo line."""
    lines = stdout.splitlines()
    assert lines[0].startswith("# config:")
    return "\n".join(lines[1:]) + "\n"


class TestCmdTest:
    def test_golden_snapshot(self, capsys, data_dir):
        code, out, _ = run_cli(capsys, "test", str(data_dir / "errors_fixture.csv"),
                               "--mu0", "0.4", "--bandwidth", "2")
        assert code == 0
        assert _table_body(out) == (data_dir / "golden_cli_test.md").read_text()

    def test_csv_has_full_precision(self, capsys, data_dir):
        code, out, _ = run_cli(capsys, "test", str(data_dir / "errors_fixture.csv"),
                               "--mu0", "0.4", "--bandwidth", "2", "--format", "csv")
        assert code == 0
        row = next(csv.DictReader(io.StringIO(_table_body(out))))
        assert float(row["statistic"]) == GOLDEN_STATISTIC
        assert row["centering"] == "segment"

    def test_mu0_half_exits_2(self, capsys, data_dir):
        code, _, err = run_cli(capsys, "test", str(data_dir / "errors_fixture.csv"),
                               "--mu0", "0.5")
        assert code == 2
        assert "mu0" in err

    def test_constant_errors(self, capsys, tmp_path):
        path = tmp_path / "const.csv"
        path.write_text("e1,e2\n" + "1.0,1.0\n" * 12)
        # the literal globally-centered normalizer keeps the balanced-split
        # zero well defined ...
        code, out, _ = run_cli(capsys, "test", str(path), "--mu0", "0.4",
                               "--bandwidth", "2", "--centering", "global",
                               "--format", "json")
        assert code == 0
        record = json.loads(_table_body(out))
        assert record["statistic"] == 0.0
        assert record["p_value"] == 0.5
        # ... while the default consistent normalizer reports degeneracy
        code, _, err = run_cli(capsys, "test", str(path), "--mu0", "0.4",
                               "--bandwidth", "2")
        assert code == 3
        assert "numerical" in err

    def test_malformed_errors_file(self, capsys, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("e1,e2\n1.0\n")
        code, _, err = run_cli(capsys, "test", str(path))
        assert code == 2
        assert "line 2" in err

    def test_missing_file(self, capsys):
        code, _, err = run_cli(capsys, "test", "/nonexistent/errors.csv")
        assert code == 2

    def test_unknown_flag_rejected(self, capsys, data_dir):
        with pytest.raises(SystemExit) as exc:
            main(["test", str(data_dir / "errors_fixture.csv"), "--bogus", "1"])
        assert exc.value.code == 2


TINY_SIZE_CONFIG = """
experiment:
  kind: size
  reps: 30
  mu0: [0.40, 0.45]
  seed: 7
dgp:
  family: dgp1
  T: 150
  h: 1
  rho: [0.25]
  beta2: 0.0
"""


class TestMcCommands:
    def test_threads_do_not_change_output_file(self, capsys, tmp_path):
        config = tmp_path / "size.yaml"
        config.write_text(textwrap.dedent(TINY_SIZE_CONFIG))
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        assert run_cli(capsys, "mc-size", str(config), "--threads", "1",
                       "--format", "csv", "--out", str(out1))[0] == 0
        assert run_cli(capsys, "mc-size", str(config), "--threads", "2",
                       "--format", "csv", "--out", str(out2))[0] == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_repeat_run_byte_identical(self, capsys, tmp_path):
        config = tmp_path / "size.yaml"
        config.write_text(textwrap.dedent(TINY_SIZE_CONFIG))
        outs = []
        for _ in range(2):
            code, out, _ = run_cli(capsys, "mc-size", str(config), "--format", "json")
            assert code == 0
            outs.append(_table_body(out))
        assert outs[0] == outs[1]

    def test_malformed_config_reports_key_path(self, capsys, tmp_path):
        config = tmp_path / "bad.yaml"
        config.write_text(textwrap.dedent("""
            experiment: {kind: size, mu0: [0.45]}
            dgp: {family: dgp1, T: 150, rho_typo: 1}
        """))
        code, _, err = run_cli(capsys, "mc-size", str(config))
        assert code == 2
        assert "dgp.rho_typo" in err

    def test_kind_mismatch(self, capsys, tmp_path):
        config = tmp_path / "size.yaml"
        config.write_text(textwrap.dedent(TINY_SIZE_CONFIG))
        code, _, err = run_cli(capsys, "mc-power", str(config))
        assert code == 2
        assert "size" in err

    def test_reps_override(self, capsys, tmp_path):
        config = tmp_path / "size.yaml"
        config.write_text(textwrap.dedent(TINY_SIZE_CONFIG))
        code, out, _ = run_cli(capsys, "mc-size", str(config), "--reps", "5",
                               "--format", "json")
        assert code == 0
        payload = json.loads(_table_body(out))
        assert all(cell["reps"] == 5 for cell in payload)


class TestLocalPowerCommand:
    def _blocks(self, tmp_path):
        path = tmp_path / "blocks.json"
        path.write_text(json.dumps({"c": [1.0], "Q11": [[1.0]], "Q12": [[0.0]],
                                    "Q21": [[0.0]], "Q22": [[1.0]]}))
        return str(path)

    def test_zero_direction_gives_level(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "local-power", self._blocks(tmp_path),
                               "--mu0", "0.45", "--c-scale", "0.0",
                               "--level", "0.10", "--format", "csv")
        assert code == 0
        row = next(csv.DictReader(io.StringIO(_table_body(out))))
        assert float(row["drift"]) == 0.0
        assert float(row["power"]) == 0.10

    def test_scalar_golden_drift(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "local-power", self._blocks(tmp_path),
                               "--mu0", "0.45", "--format", "csv")
        row = next(csv.DictReader(io.StringIO(_table_body(out))))
        assert abs(float(row["drift"]) - 8.616843969807045) < 1e-6

    def test_drift_increasing_over_mu0_grid(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "local-power", self._blocks(tmp_path),
                               "--mu0", "0.30", "0.36", "0.42", "0.48",
                               "--format", "csv")
        assert code == 0
        drifts = [float(r["drift"]) for r in csv.DictReader(io.StringIO(_table_body(out)))]
        assert all(b > a for a, b in zip(drifts, drifts[1:]))

    def test_mild_flag(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "local-power", self._blocks(tmp_path),
                               "--mild", "--format", "csv")
        assert code == 0

    def test_missing_block_key(self, capsys, tmp_path):
        path = tmp_path / "blocks.json"
        path.write_text(json.dumps({"c": [1.0], "Q11": [[1.0]]}))
        code, _, err = run_cli(capsys, "local-power", str(path))
        assert code == 2
        assert "b12" in err


class TestInflationCommand:
    def test_fixture_golden(self, capsys, fixture_panel_path, data_dir, tmp_path):
        out_file = tmp_path / "study.md"
        code, _, _ = run_cli(capsys, "inflation", fixture_panel_path,
                             "--out", str(out_file))
        assert code == 0
        assert out_file.read_text() == (data_dir / "golden_study.md").read_text()

    def test_missing_file(self, capsys):
        code, _, err = run_cli(capsys, "inflation", "/nonexistent/panel.csv")
        assert code == 2

    def test_repeated_mu0_gives_two_columns(self, capsys, fixture_panel_path):
        code, out, _ = run_cli(capsys, "inflation", fixture_panel_path,
                               "--mu0", "0.30", "0.45", "--format", "csv")
        assert code == 0
        header = _table_body(out).splitlines()[0]
        assert "p_mu0_0.3" in header and "p_mu0_0.45" in header

    def test_repeat_run_identical_bytes(self, capsys, fixture_panel_path, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(capsys, "inflation", fixture_panel_path, "--format", "csv",
                "--out", str(a))
        run_cli(capsys, "inflation", fixture_panel_path, "--format", "csv",
                "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_config_echo_printed_before_results(self, capsys, fixture_panel_path):
        _, out, _ = run_cli(capsys, "inflation", fixture_panel_path)
        assert out.splitlines()[0].startswith("# config:")
