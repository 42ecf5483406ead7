import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from bellspace.cli import CommandResult, emit, run, to_json
from bellspace.config import default_config_data, load_config, locate_line
from bellspace.errors import ConfigParseError, ConfigPhysicsError, ConfigSchemaError
from bellspace.stats import ProbTable, table_from_csv

ROOT = Path(__file__).resolve().parents[1]
EXAMPLES = ROOT / "docs" / "examples"


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2) + "\n")
    return path


class TestLoadConfig:
    def test_examples_load(self):
        for path in sorted(EXAMPLES.glob("*.json")):
            assert load_config(path).space in (1, 2)

    def test_degrees_parsed(self):
        cfg = load_config(EXAMPLES / "singlet_space1.json")
        assert cfg.arm_b.omega1.theta == pytest.approx(math.pi / 4)

    def test_physics_violation_names_arm(self, tmp_path):
        data = default_config_data()
        data["armA"]["bs"] = {"t_x": 0.6, "t_y": 0.6, "r_x": 0.7, "r_y": 0.7}
        path = write_config(tmp_path, data)
        with pytest.raises(ConfigPhysicsError) as exc:
            load_config(path)
        assert exc.value.path == "armA.bs"
        assert "armA.bs" in str(exc.value) and "physics" in str(exc.value)
        lines = path.read_text().splitlines()
        assert '"bs"' in lines[exc.value.line - 1]

    def test_missing_space(self, tmp_path):
        data = default_config_data()
        del data["space"]
        with pytest.raises(ConfigSchemaError, match="space"):
            load_config(write_config(tmp_path, data))

    def test_parse_error_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "space": 1\n  "state": {"kind": "singlet"}\n}\n')  # missing comma
        with pytest.raises(ConfigParseError) as exc:
            load_config(path)
        assert exc.value.line == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigParseError):
            load_config(tmp_path / "absent.json")

    def test_polarizing_space1(self, tmp_path):
        data = default_config_data()
        data["armB"]["bs"] = {"t_x": 0.6, "t_y": 0.8, "r_x": 0.8, "r_y": 0.6}
        with pytest.raises(ConfigPhysicsError, match="armB.bs"):
            load_config(write_config(tmp_path, data))

    def test_product_bloch_norm(self, tmp_path):
        data = default_config_data()
        data["state"] = {"kind": "product", "s_A": [0, 0, 1.2], "s_B": [0, 0, 1]}
        with pytest.raises(ConfigPhysicsError, match="state.s_A"):
            load_config(write_config(tmp_path, data))

    def test_pure_normalization(self, tmp_path):
        data = default_config_data()
        data["state"] = {"kind": "pure", "amplitudes": [1, 1, 0, 0]}
        with pytest.raises(ConfigPhysicsError, match="amplitudes"):
            load_config(write_config(tmp_path, data))

    def test_complex_amplitudes(self, tmp_path):
        h = 1 / math.sqrt(2)
        data = default_config_data()
        data["state"] = {"kind": "pure", "amplitudes": [[0, 0], [h, 0], [0, -h], 0]}
        cfg = load_config(write_config(tmp_path, data))
        assert cfg.state.density().shape == (4, 4)

    def test_bad_angle_string(self, tmp_path):
        data = default_config_data()
        data["armA"]["omega1"]["theta"] = "45 degrees"
        with pytest.raises(ConfigSchemaError):
            load_config(write_config(tmp_path, data))

    def test_scan_range_checked(self, tmp_path):
        data = default_config_data()
        data["scan"] = {"objective": "standard", "parameters": [{"name": "A.r", "min": 0, "max": 2, "count": 3}]}
        with pytest.raises(ConfigSchemaError, match="A.r"):
            load_config(write_config(tmp_path, data))

    def test_eta_needs_werner(self, tmp_path):
        data = default_config_data()
        data["scan"] = {"objective": "standard", "parameters": [{"name": "eta", "min": 0, "max": 1, "count": 3}]}
        with pytest.raises(ConfigPhysicsError, match="werner"):
            load_config(write_config(tmp_path, data))

    def test_locate_line(self):
        text = '{\n  "a": {\n    "b": 1\n  }\n}'
        assert locate_line(text, ["a", "b"]) == 3

    def test_schema_shipped_in_docs(self):
        packaged = (ROOT / "src" / "bellspace" / "config.schema.json").read_text()
        assert (ROOT / "docs" / "config.schema.json").read_text() == packaged


class TestEmit:
    def test_uniform_table_csv(self):
        text = emit(CommandResult({}, ProbTable.uniform(("a", "b"))), "csv")
        assert text.count("\n") == 5 and text.endswith("\n")

    def test_identity_matrix_json(self):
        got = json.loads(to_json(np.eye(2, dtype=complex) / 2))
        assert got == [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]

    def test_quasi_metadata(self):
        text = emit(CommandResult({}, ProbTable(("a",), [1.25, -0.25], quasi=True)), "csv")
        assert "quasi=true" in text

    def test_seventeen_digits(self):
        assert to_json({"x": 0.1}).strip() == '{\n  "x": 0.10000000000000001\n}'

    def test_round_trip_file(self, tmp_path, rng):
        w = rng.random(16)
        t = ProbTable(("j", "alpha", "k", "beta"), w / w.sum())
        path = tmp_path / "sub" / "t.csv"
        emit(CommandResult({}, t), "csv", path)
        back = table_from_csv(path.read_text())
        assert np.array_equal(back.values, t.values)
        assert path.read_bytes().endswith(b"\n")

    def test_no_negative_zero(self):
        assert "-0" not in to_json([-0.0, 0.0])

    def test_csv_unavailable(self):
        code, _, err = invoke("bell", "--format", "csv")
        assert code == 1 and "tabular" in err


class TestRun:
    def test_bell_default(self):
        code, out, _ = invoke("bell")
        assert code == 0
        assert "C   = -1.207107  VIOLATION" in out

    def test_bell_json(self):
        code, out, _ = invoke("bell", "--format", "json")
        data = json.loads(out)
        assert data["standard"]["value"] == pytest.approx(-(1 + math.sqrt(2)) / 2, abs=1e-12)
        assert data["standard"]["verdict"] == "VIOLATION"
        assert data["dual"]["verdict"] == "OK"

    def test_check_default(self):
        code, out, _ = invoke("check", "--n", "50")
        assert code == 0 and "FAIL" not in out

    def test_sample_zero(self):
        code, out, _ = invoke("sample", "--n", "0", "--seed", "7", "--format", "json")
        assert code == 0
        assert all(row[-1] == 0 for row in json.loads(out)["rows"])

    def test_sample_requires_seed(self):
        code, _, err = invoke("sample", "--n", "10")
        assert code == 1 and "--seed" in err

    def test_unknown_subcommand(self):
        code, _, err = invoke("frobnicate")
        assert code == 1 and "usage:" in err

    def test_unknown_flag(self):
        code, _, err = invoke("bell", "--fast")
        assert code == 1 and "usage:" in err

    def test_config_error_exit_1(self, tmp_path):
        data = default_config_data()
        del data["space"]
        code, _, err = invoke("bell", "--config", str(write_config(tmp_path, data)))
        assert code == 1 and "schema error" in err

    def test_zero_probability_exit_2(self, tmp_path):
        data = default_config_data()
        data["armA"]["bs"] = {"t_x": 1, "t_y": 1, "r_x": 0, "r_y": 0}
        code, _, err = invoke("bell", "--config", str(write_config(tmp_path, data)))
        assert code == 2 and "probability 0" in err

    def test_povm_space2(self):
        code, out, _ = invoke("povm", "--config", str(EXAMPLES / "singlet_space2.json"), "--format", "json")
        g = json.loads(out)["armA"]["gammas"]
        assert g["X"] == pytest.approx(1 / math.sqrt(3), abs=1e-12)

    def test_probs_conditionals(self):
        code, out, _ = invoke("probs", "--format", "json")
        data = json.loads(out)
        assert data["conditionals"]["A"]["p(j|alpha)"]["j=+1|alpha=+1"] == pytest.approx(0.5)
        assert len(data["joint"]["rows"]) == 16

    def test_bell_space2_reports_negativity(self):
        code, out, _ = invoke("bell", "--config", str(EXAMPLES / "singlet_space2.json"), "--format", "json")
        assert code == 0 and json.loads(out)["negativity"] > 1e-3

    def test_invert_needs_space2(self):
        code, _, err = invoke("invert")
        assert code == 1 and "space-2" in err

    def test_invert_from_file(self, tmp_path):
        table = tmp_path / "noisy.csv"
        table.write_text("j,k,probability\n1,1,0.4\n1,-1,0.1\n-1,1,0.2\n-1,-1,0.3\n")
        data = json.loads((EXAMPLES / "singlet_space2.json").read_text())
        data["invert"] = {"table": "noisy.csv"}
        code, out, _ = invoke("invert", "--config", str(write_config(tmp_path, data)), "--format", "csv")
        assert code == 0 and out.startswith("# quasi=true\nj,k,probability\n")

    def test_tomo_exact(self):
        code, out, _ = invoke("tomo", "--config", str(EXAMPLES / "product_space2.json"), "--format", "json")
        data = json.loads(out)
        assert data["bloch"] == pytest.approx([0, 0, 1], abs=1e-12)

    def test_tomo_from_file(self, tmp_path):
        (tmp_path / "obs.csv").write_text("j,k,probability\n1,1,1\n1,-1,0\n-1,1,0\n-1,-1,0\n")
        data = json.loads((EXAMPLES / "product_space2.json").read_text())
        data["tomo"] = {"table": "obs.csv", "clamp": True}
        code, out, _ = invoke("tomo", "--config", str(write_config(tmp_path, data)), "--format", "json")
        res = json.loads(out)
        assert res["clamped"] and res["physical"]

    def test_scan_without_section(self):
        code, _, err = invoke("scan")
        assert code == 1 and "scan" in err

    def test_out_defaults_to_json(self, tmp_path):
        path = tmp_path / "bell.json"
        code, out, _ = invoke("bell", "--out", str(path))
        assert code == 0 and json.loads(path.read_text())["space"] == 1
        assert "VIOLATION" in out

    def test_outputs_path_from_config(self, tmp_path):
        data = default_config_data()
        data["outputs"] = {"path": "results/bell.json"}
        code, _, _ = invoke("bell", "--config", str(write_config(tmp_path, data)))
        assert code == 0 and (tmp_path / "results" / "bell.json").exists()


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ("bell", "--format", "json"),
            ("sample", "--seed", "99", "--n", "5000", "--format", "csv"),
            ("scan", "--config", str(EXAMPLES / "scan_standard.json"), "--format", "csv"),
        ],
    )
    def test_byte_identical(self, tmp_path, argv):
        a, b = tmp_path / "a.out", tmp_path / "b.out"
        assert invoke(*argv, "--out", str(a))[0] == 0
        assert invoke(*argv, "--out", str(b))[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_threads_do_not_change_scan(self, tmp_path, monkeypatch):
        argv = ("scan", "--config", str(EXAMPLES / "scan_standard.json"), "--format", "json")
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        monkeypatch.setenv("BELLSPACE_THREADS", "1")
        invoke(*argv, "--out", str(a))
        monkeypatch.setenv("BELLSPACE_THREADS", "4")
        invoke(*argv, "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_different_seeds_differ(self):
        _, a, _ = invoke("sample", "--seed", "1", "--n", "1000")
        _, b, _ = invoke("sample", "--seed", "2", "--n", "1000")
        assert a != b
