import json
import math
from pathlib import Path

import pytest

from revshoot.cli import EXIT_CONFIG, EXIT_NOT_FOUND, EXIT_OK, main

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

SECH2_NL = {"terms": [{"degree": 2, "coeff": 32.5}, {"degree": 3, "coeff": -40.0}]}


@pytest.fixture(scope="module")
def cfg_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli-configs")
    (d / "point.json").write_text(
        json.dumps({"nonlinearity": SECH2_NL, "a": -3.75, "b": 3.0, "bracket": [-3.76, -3.74]})
    )
    (d / "nobracket.json").write_text(json.dumps({"nonlinearity": SECH2_NL, "b": 3.0}))
    (d / "grid.json").write_text(
        json.dumps(
            {
                "nonlinearity": SECH2_NL,
                "grid": {"a_min": -3.76, "a_max": -3.74, "b_min": 3.0, "b_max": 3.0, "step": 0.01},
            }
        )
    )
    (d / "othergrid.json").write_text(
        json.dumps(
            {
                "nonlinearity": SECH2_NL,
                "grid": {"a_min": -3.77, "a_max": -3.74, "b_min": 3.0, "b_max": 3.0, "step": 0.01},
            }
        )
    )
    return d


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestClassify:
    def test_configless_uses_linear_part_only(self, capsys):
        code, out, _ = run(capsys, ["classify", "--a", "-3.75"])
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["kind"] == "saddle_center"
        assert doc["lambda"] == 2.0
        assert doc["omega"] == 0.5

    def test_requires_a(self, capsys):
        code, _, err = run(capsys, ["classify"])
        assert code == EXIT_CONFIG
        assert "error:" in err

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.startswith("revshoot ")


class TestShoot:
    def test_json_and_csv(self, capsys, cfg_dir, tmp_path):
        out_csv = tmp_path / "shot.csv"
        code, out, _ = run(
            capsys, ["shoot", "--config", str(cfg_dir / "point.json"), "--out", str(out_csv)]
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["outcome"] in ("crossed", "escaped", "timed_out")
        assert doc["sigma"] == 1
        assert len(doc["crossings"]) >= 2
        first = doc["crossings"][0]
        assert first["k"] == 1 and first["t"] > 0.0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "t,u,v,p_u,p_v,H"
        assert len(lines) > 100
        row = lines[1].split(",")
        assert len(row) == 6
        float(row[0])  # parses

    def test_missing_config(self, capsys):
        code, _, err = run(capsys, ["shoot", "--a", "1.0"])
        assert code == EXIT_CONFIG
        assert "error:" in err


class TestFind:
    def test_recovers_known_point(self, capsys, cfg_dir, tmp_path):
        orbit_csv = tmp_path / "orbit.csv"
        code, out, _ = run(
            capsys, ["find", "--config", str(cfg_dir / "point.json"), "--out", str(orbit_csv)]
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["a_star"] == pytest.approx(-3.75, abs=1e-8)
        assert doc["k"] == 2 and doc["sigma"] == 1
        assert doc["miss_residual"] <= 1e-7
        lines = orbit_csv.read_text().splitlines()
        assert lines[0] == "t,u,v,p_u,p_v,H"
        # reconstruction spans [0, 2 t_star] with the turning point inside
        us = [float(line.split(",")[1]) for line in lines[1:]]
        assert max(us) == pytest.approx(1.0, abs=1e-6)

    def test_flag_overrides_bracket(self, capsys, cfg_dir):
        code, out, _ = run(
            capsys,
            [
                "find", "--config", str(cfg_dir / "nobracket.json"),
                "--bracket", "-3.76", "-3.74", "--k", "2", "--sigma", "1",
            ],
        )
        assert code == EXIT_OK
        assert json.loads(out)["a_star"] == pytest.approx(-3.75, abs=1e-8)

    def test_nothing_in_bracket(self, capsys, cfg_dir):
        code, _, err = run(
            capsys,
            [
                "find", "--config", str(cfg_dir / "nobracket.json"),
                "--bracket", "-3.60", "-3.58", "--k", "2", "--sigma", "1",
            ],
        )
        assert code == EXIT_NOT_FOUND
        assert "no certified locus point" in err

    def test_missing_bracket(self, capsys, cfg_dir):
        code, _, _ = run(capsys, ["find", "--config", str(cfg_dir / "nobracket.json")])
        assert code == EXIT_CONFIG

    def test_misordered_bracket_flag(self, capsys, cfg_dir):
        code, _, _ = run(
            capsys,
            ["find", "--config", str(cfg_dir / "nobracket.json"), "--bracket", "-3.74", "-3.76"],
        )
        assert code == EXIT_CONFIG


class TestScan:
    def test_scan_writes_outputs(self, capsys, cfg_dir, tmp_path):
        out_dir = tmp_path / "scan"
        code, out, _ = run(
            capsys,
            ["scan", "--config", str(cfg_dir / "grid.json"), "--out", str(out_dir), "--jobs", "1"],
        )
        assert code == EXIT_OK
        manifest = json.loads(out)
        assert manifest["loci_count"] >= 1
        assert (out_dir / "locus.csv").exists()
        assert (out_dir / "manifest.json").exists()
        assert not (out_dir / "profiles.csv").exists()

        # resuming under a different grid must refuse
        code2, _, err = run(
            capsys,
            [
                "scan", "--config", str(cfg_dir / "othergrid.json"),
                "--out", str(out_dir), "--jobs", "1", "--resume",
            ],
        )
        assert code2 == EXIT_CONFIG
        assert "refusing to resume" in err

    def test_grid_required(self, capsys, cfg_dir, tmp_path):
        code, _, _ = run(
            capsys, ["scan", "--config", str(cfg_dir / "point.json"), "--out", str(tmp_path / "x")]
        )
        assert code == EXIT_CONFIG


class TestVerify:
    def test_report_shape_and_exit(self, capsys):
        code, out, _ = run(capsys, ["verify"])
        assert code == EXIT_OK
        doc = json.loads(out)
        assert set(doc) == {
            "residual_sech",
            "residual_sech2",
            "reversibility_defect",
            "recovered_a_sech",
            "recovered_a_sech2",
        }
        assert doc["residual_sech"] < 1e-8
        assert doc["residual_sech2"] < 1e-8
        assert doc["reversibility_defect"] <= 1e-8
        assert doc["recovered_a_sech"] == pytest.approx(math.sqrt(2.0) / 2.0, abs=1e-4)
        assert doc["recovered_a_sech2"] == pytest.approx(-3.75, abs=1e-4)


class TestPlotData:
    def test_emits_figure_files(self, capsys, cfg_dir, tmp_path):
        out_dir = tmp_path / "fig"
        code, out, _ = run(
            capsys,
            ["plot-data", "--config", str(cfg_dir / "point.json"), "--out", str(out_dir)],
        )
        assert code == EXIT_OK
        info = json.loads(out)
        assert info["a_star"] == pytest.approx(-3.75, abs=1e-8)
        for name, header in [
            ("phi_surface.csv", "u,v,p_v"),
            ("chi_set.csv", "u,p_v"),
            ("orbit_homoclinic.csv", "t,u,v,p_u,p_v,H"),
            ("orbit_perturbed.csv", "t,u,v,p_u,p_v,H"),
        ]:
            lines = (out_dir / name).read_text().splitlines()
            assert lines[0] == header
            assert len(lines) > 10


class TestEnvironment:
    def test_bad_log_level(self, capsys, monkeypatch):
        monkeypatch.setenv("HOMOCLINIC_LOG", "chatty")
        code, _, err = run(capsys, ["classify", "--a", "0.5"])
        assert code == EXIT_CONFIG
        assert "HOMOCLINIC_LOG" in err

    def test_log_level_accepted(self, capsys, monkeypatch):
        monkeypatch.setenv("HOMOCLINIC_LOG", "info")
        code, _, _ = run(capsys, ["classify", "--a", "0.5"])
        assert code == EXIT_OK
