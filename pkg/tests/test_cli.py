"""CLI: spec parsing, pipeline commands, exit codes, determinism."""

from __future__ import annotations

import json
from fractions import Fraction

import pytest

from smoothasym.cli import (
    EXIT_DEGENERATE_HIGH_DIM,
    EXIT_MINIMALITY_UNKNOWN,
    EXIT_NO_CRITICAL,
    PipelineExit,
    ProblemSpec,
    main,
    run_critical,
    run_expand,
    run_oracle,
)

DELANNOY_SPEC = {
    "variables": ["x", "y"],
    "G": [{"exp": [0, 0], "coef": "1"}],
    "H": [
        {"exp": [0, 0], "coef": "1"},
        {"exp": [1, 0], "coef": "-1"},
        {"exp": [0, 1], "coef": "-1"},
        {"exp": [1, 1], "coef": "-1"},
    ],
    "p": 1,
    "alpha": ["3", "2"],
    "N": 2,
    "n_values": [1, 2, 4],
}

QWALK_SPEC = {
    "variables": ["x", "y"],
    "G": [{"exp": [0, 0], "coef": "1"}, {"exp": [1, 0], "coef": "-1/2"}],
    "H": [
        {"exp": [0, 0], "coef": "1"},
        {"exp": [1, 0], "coef": "-1/2"},
        {"exp": [1, 1], "coef": "1/2"},
        {"exp": [2, 1], "coef": "-1"},
    ],
    "p": 1,
    "alpha": ["2", "1/2"],
    "N": 5,
    "n_values": [2, 4],
}

# symmetric cubic tuned so the diagonal critical point has singular phase
# Hessian (q = 0): exercises the more-than-two-variables degenerate exit
DEGENERATE_3D_SPEC = {
    "variables": ["x", "y", "z"],
    "G": [{"exp": [0, 0, 0], "coef": "1"}],
    "H": [
        {"exp": [0, 0, 0], "coef": "1"},
        {"exp": [1, 0, 0], "coef": "-1"},
        {"exp": [0, 1, 0], "coef": "-1"},
        {"exp": [0, 0, 1], "coef": "-1"},
        {"exp": [2, 0, 0], "coef": "9/16"},
        {"exp": [0, 2, 0], "coef": "9/16"},
        {"exp": [0, 0, 2], "coef": "9/16"},
    ],
    "p": 1,
    "alpha": ["1", "1", "1"],
    "N": 1,
    "n_values": [1, 2],
}


class TestSpecParsing:
    def test_full_round(self):
        spec = ProblemSpec.from_json(DELANNOY_SPEC)
        assert spec.d == 2 and spec.p == 1 and spec.N == 2
        assert spec.alpha.alpha == (Fraction(3), Fraction(2))
        assert spec.precision.bits == 212

    def test_rational_g(self):
        obj = dict(DELANNOY_SPEC)
        obj["G"] = {
            "numer": [{"exp": [0, 0], "coef": "1"}],
            "denom": [{"exp": [0, 0], "coef": "1"}, {"exp": [1, 0], "coef": "1"}],
        }
        spec = ProblemSpec.from_json(obj)
        assert spec.G_den is not None

    def test_env_var_precision(self, monkeypatch):
        monkeypatch.setenv("SMOOTHASYM_PRECISION", "128")
        spec = ProblemSpec.from_json(DELANNOY_SPEC)
        assert spec.precision.bits == 128

    def test_seeds(self):
        obj = dict(QWALK_SPEC)
        obj["seeds"] = [[["1", "0"], [1.0, 0.0]]]
        spec = ProblemSpec.from_json(obj)
        assert len(spec.seeds) == 1 and len(spec.seeds[0]) == 2

    def test_bad_p_rejected(self):
        obj = dict(DELANNOY_SPEC)
        obj["p"] = 0
        with pytest.raises(Exception):
            ProblemSpec.from_json(obj)


class TestRunExpand:
    def test_delannoy_result_shape(self):
        spec = ProblemSpec.from_json(DELANNOY_SPEC)
        result, csv_text = run_expand(spec)
        assert set(result) >= {"provenance", "critical_points", "expansion", "table"}
        lines = csv_text.strip().split("\n")
        assert lines[0] == "n,exact,approx_1,approx_N,rel_err_1,rel_err_N"
        assert len(lines) == 1 + len(spec.n_values)
        row1 = lines[1].split(",")
        assert row1[0] == "1" and row1[1] == "25.0"
        assert abs(float(row1[4]) - (-0.05052565800)) < 1e-8

    def test_determinism(self):
        spec = ProblemSpec.from_json(DELANNOY_SPEC)
        out1 = run_expand(spec)
        out2 = run_expand(spec)
        assert json.dumps(out1[0], sort_keys=True) == json.dumps(out2[0], sort_keys=True)
        assert out1[1] == out2[1]

    def test_minimality_gate(self):
        spec = ProblemSpec.from_json(QWALK_SPEC)
        with pytest.raises(PipelineExit) as err:
            run_expand(spec)
        assert err.value.code == EXIT_MINIMALITY_UNKNOWN

    def test_override_allows_quantum_walk(self):
        obj = dict(QWALK_SPEC)
        obj["overrides"] = {"assume_strictly_minimal": True}
        result, csv_text = run_expand(ProblemSpec.from_json(obj))
        assert result["expansion"]["kind"] == "degenerate-odd"
        row = csv_text.strip().split("\n")[1].split(",")
        assert abs(float(row[2]) - 0.1953794677) < 1e-8

    def test_origin_on_variety(self):
        obj = dict(DELANNOY_SPEC)
        obj["H"] = [{"exp": [1, 0], "coef": "1"}, {"exp": [0, 1], "coef": "1"}]
        with pytest.raises(PipelineExit) as err:
            run_expand(ProblemSpec.from_json(obj))
        assert err.value.code == EXIT_NO_CRITICAL
        assert "origin" in err.value.diagnostic["error"]

    def test_degenerate_beyond_two_vars(self):
        obj = dict(DEGENERATE_3D_SPEC)
        obj["overrides"] = {"assume_strictly_minimal": True}
        with pytest.raises(PipelineExit) as err:
            run_expand(ProblemSpec.from_json(obj))
        assert err.value.code == EXIT_DEGENERATE_HIGH_DIM

    def test_no_critical_point_without_seeds(self):
        obj = {
            "variables": ["x", "y", "z"],
            "G": [{"exp": [0, 0, 0], "coef": "1"}],
            "H": [
                {"exp": [0, 0, 0], "coef": "1"},
                {"exp": [1, 0, 0], "coef": "-1"},
                {"exp": [0, 1, 0], "coef": "-2"},
                {"exp": [0, 0, 1], "coef": "-3"},
            ],
            "p": 1,
            "alpha": ["1", "1", "1"],
            "N": 1,
            "n_values": [1],
        }
        with pytest.raises(PipelineExit) as err:
            run_expand(ProblemSpec.from_json(obj))
        assert err.value.code == EXIT_NO_CRITICAL

    def test_univariate_route(self):
        obj = {
            "variables": ["x"],
            "G": [{"exp": [0], "coef": "1"}],
            "H": [{"exp": [0], "coef": "1"}, {"exp": [1], "coef": "-2"}],
            "p": 1,
            "alpha": ["1"],
            "N": 1,
            "n_values": [1, 2, 3, 10],
        }
        result, csv_text = run_expand(ProblemSpec.from_json(obj))
        rows = csv_text.strip().split("\n")[1:]
        for row in rows:
            cells = row.split(",")
            assert abs(float(cells[1]) - 2 ** int(cells[0])) < 1e-9
            assert abs(float(cells[5])) < 1e-40


class TestRunCriticalAndOracle:
    def test_critical_reports(self):
        spec = ProblemSpec.from_json(DELANNOY_SPEC)
        out = run_critical(spec)
        assert len(out["critical_points"]) == 2
        kinds = sorted(r["minimality"]["kind"] for r in out["critical_points"])
        assert kinds == ["not-minimal", "strictly-minimal"]

    def test_oracle_rows(self):
        spec = ProblemSpec.from_json(DELANNOY_SPEC)
        csv_text = run_oracle(spec)
        lines = csv_text.strip().split("\n")
        assert lines[0] == "beta_x,beta_y,exact_rational,decimal"
        assert lines[1].split(",") == ["3", "2", "25", "25.0"]

    def test_oracle_quantum_walk_value(self):
        obj = dict(QWALK_SPEC)
        obj["n_values"] = [2, 32]
        csv_text = run_oracle(ProblemSpec.from_json(obj))
        rows = [line.split(",") for line in csv_text.strip().split("\n")[1:]]
        assert rows[0][:2] == ["4", "1"] and rows[0][3] == "0.1875"
        assert rows[1][:2] == ["64", "16"] and rows[1][3].startswith("0.0774425381")


class TestMainEntry:
    def _write(self, tmp_path, obj, name="spec.json"):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)

    def test_expand_writes_files(self, tmp_path, capsys):
        spec_path = self._write(tmp_path, DELANNOY_SPEC)
        out_json = str(tmp_path / "out.json")
        out_csv = str(tmp_path / "out.csv")
        code = main(
            ["expand", "--input", spec_path, "--out-json", out_json,
             "--out-csv", out_csv]
        )
        assert code == 0
        data = json.loads(open(out_json).read())
        assert data["provenance"]["precision_bits"] == 212
        assert open(out_csv).read().startswith("n,exact,")

    def test_flag_overrides(self, tmp_path, capsys):
        spec_path = self._write(tmp_path, DELANNOY_SPEC)
        code = main(["expand", "--input", spec_path, "--N", "1",
                     "--n-values", "1,2", "--precision-bits", "128"])
        assert code == 0
        out = capsys.readouterr().out
        # JSON then CSV on stdout; CSV has exactly two data rows
        assert out.count("\n25.0") == 0  # csv cells are comma separated
        assert len([l for l in out.splitlines() if l.startswith("1,") or l.startswith("2,")]) == 2

    def test_exit_code_minimality(self, tmp_path, capsys):
        spec_path = self._write(tmp_path, QWALK_SPEC)
        code = main(["expand", "--input", spec_path])
        assert code == EXIT_MINIMALITY_UNKNOWN
        err = capsys.readouterr().err
        assert "strictly minimal" in err

    def test_exit_code_with_override_flag(self, tmp_path, capsys):
        spec_path = self._write(tmp_path, QWALK_SPEC)
        code = main(["expand", "--input", spec_path, "--assume-strictly-minimal"])
        assert code == 0

    def test_exit_origin(self, tmp_path, capsys):
        obj = dict(DELANNOY_SPEC)
        obj["H"] = [{"exp": [1, 0], "coef": "1"}]
        spec_path = self._write(tmp_path, obj)
        code = main(["expand", "--input", spec_path])
        assert code == EXIT_NO_CRITICAL
        assert "origin" in capsys.readouterr().err

    def test_exit_degenerate_high_dim(self, tmp_path, capsys):
        spec_path = self._write(tmp_path, DEGENERATE_3D_SPEC)
        code = main(["expand", "--input", spec_path, "--assume-strictly-minimal"])
        assert code == EXIT_DEGENERATE_HIGH_DIM

    def test_malformed_spec(self, tmp_path, capsys):
        spec_path = self._write(tmp_path, {"variables": ["x"]})
        code = main(["expand", "--input", spec_path])
        assert code == 1

    def test_critical_command(self, tmp_path, capsys):
        spec_path = self._write(tmp_path, DELANNOY_SPEC)
        assert main(["critical", "--input", spec_path]) == 0
        out = capsys.readouterr().out
        assert '"critical_points"' in out

    def test_oracle_command(self, tmp_path, capsys):
        spec_path = self._write(tmp_path, DELANNOY_SPEC)
        assert main(["oracle", "--input", spec_path]) == 0
        assert "beta_x" in capsys.readouterr().out
