import csv
import json

import numpy as np
import pytest

from sublineq.cli import main
from sublineq.config import parse_config, build_problem
from sublineq.errors import ConfigurationError


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def scalar_config(outdir, tol=1e-10):
    return {
        "problem": {
            "kernel": {"type": "matrix", "points": [[0.0]], "values": [[1.0]],
                       "wmp_constant": 1.0},
            "exponents": [0.5],
            "measures": [{"kind": "atoms", "data": [[0.0, 4.0]]}],
            "points": {"kind": "explicit", "data": [[0.0]]},
        },
        "solver": {"tol": tol},
        "seed": 1,
        "output": {"dir": outdir},
    }


def riesz_config(outdir):
    return {
        "problem": {
            "kernel": {"type": "riesz", "n": 3, "alpha": 1.0},
            "exponents": [0.5, 0.3],
            "measures": [
                {"kind": "density",
                 "grid": {"shape": "box", "lo": [-1, -1, -1], "hi": [1, 1, 1], "cells": 3},
                 "density": {"name": "gaussian", "amplitude": 0.4, "width": 0.8},
                 "scale": 1.0},
                {"kind": "atoms", "data": []},
            ],
            "harmonic": 0.2,
            "points": {"kind": "random-box", "count": 4, "lo": [1.5, 1.5, 1.5],
                       "hi": [2, 2, 2]},
        },
        "solver": {"tol": 1e-10},
        "seed": 7,
        "output": {"dir": outdir},
    }


class TestConfigValidation:
    def test_unknown_keys_rejected(self, tmp_path):
        cfg = scalar_config(str(tmp_path))
        cfg["problem"]["typo_key"] = 1
        with pytest.raises(ConfigurationError, match="typo_key"):
            build_problem(cfg["problem"], cfg["solver"], 0)

    def test_exponent_out_of_range_exit_code_and_message(self, tmp_path, capsys):
        cfg = scalar_config(str(tmp_path))
        cfg["problem"]["exponents"] = [1.2]
        path = write_config(tmp_path, cfg)
        rc = main(["solve", "--config", path])
        err = capsys.readouterr().err
        assert rc == 1
        assert "(0,1)" in err

    def test_missing_config_file(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 1

    def test_parse_root_keys(self):
        with pytest.raises(ConfigurationError, match="unknown key"):
            parse_config({"problem": {}, "bogus": 1})


class TestSolveCommand:
    def test_end_to_end_artifacts_and_determinism(self, tmp_path):
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        cfg = riesz_config(str(out1))
        path = write_config(tmp_path, cfg)
        assert main(["solve", "--config", path]) == 0
        cfg2 = dict(cfg)
        cfg2["output"] = {"dir": str(out2)}
        path2 = write_config(tmp_path, cfg2, "config2.json")
        assert main(["solve", "--config", path2]) == 0

        rep1 = json.loads((out1 / "report.json").read_text())
        rep2 = json.loads((out2 / "report.json").read_text())
        rep1.pop("metadata")
        rep2.pop("metadata")
        assert rep1 == rep2  # identical config + seed -> identical report

        with open(out1 / "solution.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x1", "x2", "x3", "u", "lower", "upper"]
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        assert np.all(data[:, 3] >= data[:, 4] - 1e-9)  # u >= lower
        assert np.all(data[:, 3] <= data[:, 5] + 1e-9)  # u <= upper

    def test_nonexistence_exit_code(self, tmp_path):
        out = str(tmp_path / "out")
        cfg = {
            "problem": {
                "kernel": {"type": "riesz", "n": 3, "alpha": 1.0},
                "exponents": [0.5],
                "measures": [
                    {"kind": "density",
                     "grid": {"shape": "ball", "center": [0, 0, 0], "radius": 1000.0,
                              "cells": 8},
                     "density": {"name": "constant", "value": 10.0}},
                ],
                "points": {"kind": "explicit", "data": [[0.0, 0.0, 0.0]]},
            },
            "solver": {"blowup_threshold": 1e6},
            "output": {"dir": out},
        }
        path = write_config(tmp_path, cfg)
        assert main(["solve", "--config", path]) == 3

    def test_from_above_mode(self, tmp_path):
        out = tmp_path / "out"
        cfg = scalar_config(str(out))
        cfg["solver"]["mode"] = "from-above"
        path = write_config(tmp_path, cfg)
        assert main(["solve", "--config", path]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["mode"] == "descending-from-above"

    def test_env_outdir_override(self, tmp_path, monkeypatch):
        override = tmp_path / "forced"
        monkeypatch.setenv("SUBLINEQ_OUTDIR", str(override))
        cfg = scalar_config(str(tmp_path / "ignored"))
        path = write_config(tmp_path, cfg)
        assert main(["solve", "--config", path]) == 0
        assert (override / "report.json").exists()


class TestCertifyCommand:
    def test_roundtrip_and_corruption(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = scalar_config(str(out))
        path = write_config(tmp_path, cfg)
        assert main(["solve", "--config", path]) == 0
        sol = out / "solution.csv"
        assert main(["certify", "--config", path, "--solution", str(sol)]) == 0

        rows = list(csv.reader(open(sol)))
        rows[1][1] = str(float(rows[1][1]) * 1.01)  # corrupt u on the tight upper side
        bad = tmp_path / "bad.csv"
        with open(bad, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        assert main(["certify", "--config", path, "--solution", str(bad)]) == 2


class TestOtherCommands:
    def test_kato_command(self, tmp_path):
        out = tmp_path / "out"
        cfg = riesz_config(str(out))
        cfg["kato"] = {"radii": [0.5, 0.25]}
        cfg["problem"]["points"] = {"kind": "grid",
                                    "grid": {"shape": "box", "lo": [-1, -1, -1],
                                             "hi": [1, 1, 1], "cells": 2}}
        path = write_config(tmp_path, cfg)
        assert main(["kato", "--config", path]) == 0
        rows = list(csv.reader(open(out / "kato.csv")))
        assert rows[0] == ["measure", "r", "omega"]
        assert len(rows) > 1

    def test_intrinsic_command(self, tmp_path):
        out = tmp_path / "out"
        cfg = {
            "problem": {
                "kernel": {"type": "matrix", "points": [[0.0], [1.0], [2.0]],
                           "values": [[2.0, 1.0, 0.4], [1.0, 3.0, 0.9], [0.4, 0.9, 1.5]],
                           "wmp_constant": 2.0},
                "exponents": [0.5],
                "measures": [{"kind": "atoms", "data": [[0.0, 0.7], [1.0, 0.3]]}],
                "points": {"kind": "explicit", "data": [[0.0], [1.0], [2.0]]},
            },
            "output": {"dir": str(out)},
        }
        path = write_config(tmp_path, cfg)
        assert main(["intrinsic", "--config", path, "--point", "2"]) == 0
        assert (out / "kappa.csv").exists()
        payload = json.loads((out / "intrinsic.json").read_text())
        assert "measure_0" in payload

    def test_kernel_check_command(self, tmp_path):
        out = tmp_path / "out"
        cfg = riesz_config(str(out))
        path = write_config(tmp_path, cfg)
        assert main(["kernel-check", "--config", path]) == 0
        payload = json.loads((out / "kernel-check.json").read_text())
        assert payload["symmetry_class"] == "symmetric"

    def test_modified_kernel_and_power_density(self, tmp_path):
        out = tmp_path / "out"
        cfg = {
            "problem": {
                "kernel": {"type": "modified",
                           "base": {"type": "green_ball", "n": 2, "center": [0, 0],
                                    "radius": 1.0},
                           "modifier": {"name": "constant", "value": 2.0},
                           "wmp_constant": 1.0},
                "exponents": [0.4],
                "measures": [{"kind": "density",
                              "grid": {"shape": "ball", "center": [0, 0], "radius": 0.6,
                                       "cells": 4},
                              "density": {"name": "power", "p": 1.0, "scale": 0.5}}],
                "points": {"kind": "random-ball", "count": 3, "center": [0, 0],
                           "radius": 0.5},
            },
            "solver": {"tol": 1e-10},
            "seed": 3,
            "output": {"dir": str(out)},
        }
        path = write_config(tmp_path, cfg)
        # a constant modifier leaves the maximum-principle constant valid, so the solve runs
        assert main(["solve", "--config", path]) == 0

    def test_matrix_kernel_from_csv(self, tmp_path):
        pts_csv = tmp_path / "pts.csv"
        val_csv = tmp_path / "vals.csv"
        with open(pts_csv, "w", newline="") as fh:
            csv.writer(fh).writerows([[0.0], [1.0]])
        with open(val_csv, "w", newline="") as fh:
            csv.writer(fh).writerows([[1.0, 0.5], [0.5, 1.0]])
        atoms_csv = tmp_path / "atoms.csv"
        with open(atoms_csv, "w", newline="") as fh:
            csv.writer(fh).writerows([[0.0, 1.0], [1.0, 1.0]])
        cfg = {
            "problem": {
                "kernel": {"type": "matrix", "points_csv": str(pts_csv),
                           "values_csv": str(val_csv), "wmp_constant": 1.0},
                "exponents": [0.5],
                "measures": [{"kind": "atoms", "csv": str(atoms_csv)}],
                "points": {"kind": "explicit", "data": [[0.0], [1.0]]},
            },
            "output": {"dir": str(tmp_path / "out")},
        }
        path = write_config(tmp_path, cfg)
        assert main(["solve", "--config", path]) == 0


class TestShippedExample:
    def test_example_config_solves_and_certifies(self, tmp_path, monkeypatch):
        import os

        example = os.path.join(os.path.dirname(__file__), "..", "configs", "example.json")
        monkeypatch.setenv("SUBLINEQ_OUTDIR", str(tmp_path))
        assert main(["solve", "--config", example]) == 0
        assert main(["kato", "--config", example]) == 0
        assert main(["certify", "--config", example,
                     "--solution", str(tmp_path / "solution.csv")]) == 0


class TestScenarioCommand:
    def test_list_has_at_least_ten_unique_ids(self, capsys):
        assert main(["scenario", "list"]) == 0
        out = capsys.readouterr().out
        ids = [line.split()[0] for line in out.splitlines()[1:] if line.strip()]
        assert len(ids) >= 10
        assert len(set(ids)) == len(ids)

    def test_run_scalar(self, tmp_path):
        assert main(["scenario", "run", "scalar-fixed-point", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "scenario-scalar-fixed-point.json").exists()

    def test_unknown_scenario(self):
        assert main(["scenario", "run", "does-not-exist"]) == 1

    def test_uniqueness_cross_composition(self):
        # the catalogued scenario runs both solvers plus the gap report
        from sublineq.scenarios import SCENARIOS

        assert "uniqueness-cross" in SCENARIOS
        out = SCENARIOS["uniqueness-cross"].fn(seed=3, outdir=None, instances=2)
        assert out["passed"]
        assert "worst_kappa" in out["checks"]
