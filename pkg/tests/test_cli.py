"""Command-line interface: output formats, exit codes, and verify suites."""
import json

import numpy as np
import pytest

from biortho import ChgueParams, chgue_kernel, chgue_type_two
from biortho.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestKernelCommand:
    def test_csv_output(self, capsys):
        code, out, _ = run(
            capsys,
            "kernel", "--ensemble", "chgue", "--alpha", "1",
            "--a", "1.1,0.4", "--grid", "0.5:2.5:3",
        )
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "x,y,K"
        assert len(lines) == 1 + 9  # 3x3 grid
        p = ChgueParams(1.0, (1.1, 0.4))
        x, y, k = (float(v) for v in lines[1].split(","))
        assert k == pytest.approx(chgue_kernel(p, x, y), rel=1e-12)

    def test_json_schema(self, capsys):
        code, out, _ = run(
            capsys,
            "kernel", "--ensemble", "chgue", "--a", "1.0,0.3",
            "--grid", "1:2:2", "--format", "json",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert set(doc) == {"params", "grid", "values", "metadata"}
        assert "seed" in doc["metadata"] and "versions" in doc["metadata"]
        assert {"biortho", "numpy", "scipy"} <= set(doc["metadata"]["versions"])
        assert len(doc["values"]) == 4

    def test_cross_check(self, capsys):
        code, out, err = run(
            capsys,
            "kernel", "--ensemble", "chgue", "--a", "1.2,0.5",
            "--grid", "0.5:4:3", "--cross-check", "--format", "json",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["metadata"]["cross_check_max_rel_dev"] < 1e-7
        assert "cross-check" in err

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "k.csv"
        code, out, _ = run(
            capsys,
            "kernel", "--ensemble", "laguerre", "--n", "3",
            "--grid", "0.5:2:2", "--out", str(path),
        )
        assert code == EXIT_OK
        assert out == ""
        assert path.read_text().startswith("x,y,K")

    def test_17_digit_csv(self, capsys):
        _, out, _ = run(
            capsys,
            "kernel", "--ensemble", "chgue", "--a", "0.9,0.2",
            "--grid", "1:1:1",
        )
        value = out.strip().splitlines()[1].split(",")[2]
        # 17 significant digits survive a float round trip exactly
        assert float(value) == float(f"{float(value):.17g}")
        assert len(value.replace("-", "").replace(".", "").lstrip("0")) >= 15


class TestPolyCommand:
    def test_type_two_values(self, capsys):
        code, out, _ = run(
            capsys,
            "poly", "--ensemble", "chgue", "--alpha", "0.5",
            "--a", "1.3,0.6", "--kind", "II", "--grid", "0:4:5",
        )
        assert code == EXIT_OK
        p = chgue_type_two(ChgueParams(0.5, (1.3, 0.6)))
        for line in out.strip().splitlines()[1:]:
            x, v = (float(s) for s in line.split(","))
            assert v == pytest.approx(p(x), rel=1e-12)

    def test_type_one_selftest(self, capsys):
        code, _, err = run(
            capsys,
            "poly", "--ensemble", "chgue", "--a", "1.3,0.6",
            "--kind", "I", "--grid", "0:4:5",
        )
        assert code == EXIT_OK
        assert "self-test" in err

    def test_confluent(self, capsys):
        code, out, _ = run(
            capsys,
            "poly", "--ensemble", "confluent", "--alpha", "1",
            "--b", "0.8,0.0", "--mult", "2,1", "--kind", "II",
            "--grid", "0:4:3",
        )
        assert code == EXIT_OK
        assert len(out.strip().splitlines()) == 4


class TestCorrAndSample:
    def test_corr(self, capsys):
        code, out, _ = run(
            capsys,
            "corr", "--ensemble", "chgue", "--a", "1.0,0.4",
            "--points", "0.8,2.2",
        )
        assert code == EXIT_OK
        header, row = out.strip().splitlines()
        assert header == "x1,x2,rho"
        assert float(row.split(",")[2]) > 0

    def test_sample_deterministic(self, capsys):
        args = (
            "sample", "--ensemble", "chgue", "--alpha", "1",
            "--a", "0.5,1.5", "--samples", "4", "--seed", "7",
        )
        code1, out1, _ = run(capsys, *args)
        code2, out2, _ = run(capsys, *args)
        assert code1 == code2 == EXIT_OK
        assert out1 == out2
        assert len(out1.strip().splitlines()) == 5


class TestVerifySuites:
    def test_gram_suite_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "gram", "--a", "1.3,0.7,0.2")
        assert code == EXIT_OK
        assert "PASS gram" in out
        assert out.strip().splitlines()[-1] == "SUITE PASS"

    def test_kernel_suite_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "kernel")
        assert code == EXIT_OK
        assert "SUITE PASS" in out

    def test_ortho_suite_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "ortho")
        assert code == EXIT_OK
        assert "SUITE PASS" in out

    def test_corollary_suite_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "corollary")
        assert code == EXIT_OK

    def test_rankdecomp_suite_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "rankdecomp")
        assert code == EXIT_OK

    def test_mc_suite_passes(self, capsys):
        code, out, _ = run(
            capsys,
            "verify", "--suite", "mc", "--alpha", "1", "--a", "0.3,1.1",
            "--samples", "60000",
        )
        assert code == EXIT_OK

    def test_tol_override_forces_failure(self, capsys):
        code, out, _ = run(
            capsys,
            "verify", "--suite", "gram", "--a", "1.3,0.7",
            "--tol-override", "gram=1e-18",
        )
        assert code == EXIT_VERIFY
        assert "FAIL" in out
        assert "SUITE FAIL" in out

    def test_unknown_tol_key(self, capsys):
        code, _, err = run(
            capsys,
            "verify", "--suite", "gram", "--tol-override", "nope=1",
        )
        assert code == EXIT_USAGE
        assert "error" in err


class TestErrorsAndConfig:
    def test_usage_error_exit_code(self, capsys):
        code, _, err = run(capsys, "kernel", "--ensemble", "chgue")  # no --a
        assert code == EXIT_USAGE
        assert "error" in err

    def test_bad_grid(self, capsys):
        code, _, _ = run(
            capsys, "kernel", "--ensemble", "chgue", "--a", "1,0.4",
            "--grid", "nonsense",
        )
        assert code == EXIT_USAGE

    def test_numeric_error_exit_code(self, capsys):
        # coincident sources make the quadrature Gram singular -> numeric
        code, _, err = run(
            capsys,
            "corr", "--ensemble", "chgue", "--a", "1.0,1.0",
            "--points", "0.5,1.5",
        )
        assert code == EXIT_NUMERIC
        assert "numeric error" in err

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"ensemble": "chgue", "a": "1.1,0.4", "alpha": 1.0}))
        code, out, _ = run(
            capsys,
            "--config", str(cfg), "kernel", "--grid", "1:2:2",
        )
        assert code == EXIT_OK
        assert len(out.strip().splitlines()) == 5

    def test_explicit_flag_beats_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"a": "9.0,8.0", "grid": "1:2:2"}))
        code, out, _ = run(
            capsys,
            "--config", str(cfg), "kernel", "--ensemble", "chgue",
            "--a", "1.1,0.4",
        )
        assert code == EXIT_OK
        # config grid applies (1:2:2), explicit --a wins
        p = ChgueParams(0.0, (1.1, 0.4))
        line = out.strip().splitlines()[1]
        x, y, k = (float(v) for v in line.split(","))
        assert k == pytest.approx(chgue_kernel(p, x, y), rel=1e-12)
