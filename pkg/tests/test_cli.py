"""Config parsing, command dispatch, output formats, and byte determinism."""

import json
import math

import numpy as np
import pytest

from kahanmaps.cli import (
    ExperimentConfig,
    config_to_json_dict,
    main,
    parse_config,
    run_command,
)

KIRCHHOFF_DOC = {
    "system": "kirchhoff",
    "a1": 1.0,
    "a3": 2.0,
    "b1": 1.0,
    "b3": 3.0,
}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


class TestParseConfig:
    def test_minimal_flat_config(self, tmp_path):
        doc = {
            "system": "lagrange",
            "alpha": 2.0,
            "gamma": 1.0,
            "x0": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
        }
        cfg = parse_config(write_config(tmp_path, doc))
        assert cfg.kind == "lagrange"
        assert cfg.params.alpha == 2.0
        assert cfg.eps == 0.05
        assert cfg.steps == 1000
        assert cfg.seed == 42
        assert np.array_equal(cfg.x0, doc["x0"])

    def test_nested_params_equivalent(self, tmp_path):
        doc = {"system": "lagrange", "params": {"alpha": 2.0, "gamma": 1.0}}
        cfg = parse_config(write_config(tmp_path, doc))
        assert cfg.params.gamma == 1.0
        assert cfg.x0 is None

    def test_missing_omega_named(self, tmp_path):
        path = write_config(tmp_path, {"system": "first_clebsch"})
        with pytest.raises(ValueError, match="omega"):
            parse_config(path)

    def test_unknown_system_kind(self, tmp_path):
        path = write_config(tmp_path, {"system": "euler_top"})
        with pytest.raises(ValueError, match="euler_top"):
            parse_config(path)

    def test_missing_system_field(self, tmp_path):
        path = write_config(tmp_path, {"alpha": 2.0})
        with pytest.raises(ValueError, match="system"):
            parse_config(path)

    def test_flat_and_nested_params_conflict(self, tmp_path):
        doc = {"system": "lagrange", "params": {"alpha": 2.0, "gamma": 1.0}, "alpha": 3.0}
        with pytest.raises(ValueError, match="nested and flat"):
            parse_config(write_config(tmp_path, doc))

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"system": "lagrange",\n  "alpha": }', encoding="utf-8")
        with pytest.raises(ValueError, match="line 2"):
            parse_config(str(path))

    def test_wrong_x0_length(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, x0=[0.1, 0.2])
        with pytest.raises(ValueError, match="6 components"):
            parse_config(write_config(tmp_path, doc))

    def test_overrides_beat_file(self, tmp_path):
        path = write_config(tmp_path, dict(KIRCHHOFF_DOC, eps=0.01))
        cfg = parse_config(path, {"eps": 0.2, "seed": 7, "system": None})
        assert cfg.eps == 0.2
        assert cfg.seed == 7

    def test_bad_orders_rejected(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, orders=[0, 1])
        with pytest.raises(ValueError, match="orders"):
            parse_config(write_config(tmp_path, doc))

    def test_json_roundtrip_is_canonical(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, eps=0.1, orders=[1, 2, 3], trials=25)
        cfg = parse_config(write_config(tmp_path, doc))
        emitted = config_to_json_dict(cfg)
        again = parse_config(write_config(tmp_path, emitted, name="again.json"))
        assert config_to_json_dict(again) == emitted


class TestSimulate:
    def test_orbit_csv_layout(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, steps=5, x0=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
        cfg = parse_config(write_config(tmp_path, doc))
        assert run_command(cfg, "simulate", str(tmp_path)) == 0
        lines = (tmp_path / "orbit.csv").read_text().splitlines()
        header = lines[0].split(",")
        assert header[:8] == ["step", "x1", "x2", "x3", "x4", "x5", "x6", "delta"]
        assert header[8:] == ["I0", "J0", "c1", "c3", "C1", "C3", "density_C1", "density_C3"]
        assert len(lines) == 6
        assert lines[1].split(",")[0] == "1"

    def test_full_roundtrip_precision(self, tmp_path):
        from kahanmaps.quadfield import kahan_step
        from kahanmaps.systems import build_system

        doc = dict(KIRCHHOFF_DOC, steps=1, x0=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], eps=0.05)
        cfg = parse_config(write_config(tmp_path, doc))
        run_command(cfg, "simulate", str(tmp_path))
        row = (tmp_path / "orbit.csv").read_text().splitlines()[1].split(",")
        desc = build_system(cfg.kind, cfg.params)
        step = kahan_step(desc.field, np.asarray(doc["x0"]), 0.05)
        for text, exact in zip(row[1:8], list(step.next) + [step.delta]):
            assert float(text) == exact

    def test_steps_zero_header_only(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, steps=0)
        cfg = parse_config(write_config(tmp_path, doc))
        run_command(cfg, "simulate", str(tmp_path))
        lines = (tmp_path / "orbit.csv").read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("step,x1")

    def test_pole_at_first_step_is_an_error(self, tmp_path, capsys):
        doc = {
            "system": "planar_family",
            "qform": [1.0, 0.0, -1.0],
            "ell": [1.0, 0.0],
            "ell0": 0.0,
            "eps": 0.5,
            "steps": 10,
            "x0": [1.414213562373095, 0.0],
        }
        path = write_config(tmp_path, doc)
        code = main(["simulate", "--config", path, "--out", str(tmp_path)])
        assert code == 2
        assert "pole at the first step" in capsys.readouterr().err

    def test_missing_x0_drawn_from_seed(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, steps=3)
        cfg = parse_config(write_config(tmp_path, doc))
        run_command(cfg, "simulate", str(tmp_path))
        first = (tmp_path / "orbit.csv").read_bytes()
        run_command(cfg, "simulate", str(tmp_path))
        assert (tmp_path / "orbit.csv").read_bytes() == first

    def test_seed_changes_drawn_orbit(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, steps=3)
        cfg_a = parse_config(write_config(tmp_path, dict(doc, seed=1)))
        run_command(cfg_a, "simulate", str(tmp_path))
        first = (tmp_path / "orbit.csv").read_bytes()
        cfg_b = parse_config(write_config(tmp_path, dict(doc, seed=2)))
        run_command(cfg_b, "simulate", str(tmp_path))
        assert (tmp_path / "orbit.csv").read_bytes() != first


class TestVerifyCommand:
    def test_passes_and_writes_json(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, trials=30, steps=60)
        cfg = parse_config(write_config(tmp_path, doc))
        assert run_command(cfg, "verify", str(tmp_path)) == 0
        docs = json.loads((tmp_path / "verify.json").read_text())
        names = [d["name"] for d in docs]
        assert "kirchhoff.reversibility" in names
        assert "kirchhoff.conserved.m3" in names
        assert all(d["passed"] for d in docs)

    def test_byte_identical_reruns(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, trials=10, steps=20)
        cfg = parse_config(write_config(tmp_path, doc))
        run_command(cfg, "verify", str(tmp_path))
        first = (tmp_path / "verify.json").read_bytes()
        run_command(cfg, "verify", str(tmp_path))
        assert (tmp_path / "verify.json").read_bytes() == first


class TestHkScan:
    def test_kirchhoff_orders_reported(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, x0=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], eps=0.05)
        cfg = parse_config(write_config(tmp_path, doc))
        assert run_command(cfg, "hk-scan", str(tmp_path)) == 0
        scan = json.loads((tmp_path / "hkscan.json").read_text())
        assert scan["system"] == "kirchhoff"
        orders = {entry["order"]: entry for entry in scan["orders"]}
        assert sorted(orders) == [1, 2, 3, 4]
        for ell in (1, 2, 3):
            assert orders[ell]["null_dim"] == 1
            assert orders[ell]["gap_ratio"] >= 1e6
        assert isinstance(orders[4]["null_dim"], int)

    def test_requested_orders_only(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, orders=[1, 2], x0=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
        cfg = parse_config(write_config(tmp_path, doc))
        run_command(cfg, "hk-scan", str(tmp_path))
        scan = json.loads((tmp_path / "hkscan.json").read_text())
        assert [entry["order"] for entry in scan["orders"]] == [1, 2]

    def test_planar_scan_is_config_error(self, tmp_path, capsys):
        doc = {
            "system": "planar_family",
            "qform": [1.0, 0.5, 2.0],
            "ell": [1.0, -1.0],
            "ell0": 0.2,
        }
        path = write_config(tmp_path, doc)
        code = main(["hk-scan", "--config", path, "--out", str(tmp_path)])
        assert code == 2
        assert "planar_family" in capsys.readouterr().err


class TestReportCommand:
    def test_report_text(self, tmp_path):
        doc = dict(KIRCHHOFF_DOC, trials=30, steps=60, x0=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
        cfg = parse_config(write_config(tmp_path, doc))
        assert run_command(cfg, "report", str(tmp_path)) == 0
        text = (tmp_path / "report.txt").read_text()
        assert "[PASS]" in text
        assert "[FAIL]" not in text
        assert "[INFO] order-4" in text
        assert text.rstrip().endswith("overall: PASS")
        assert "conservation of m3" in text


class TestMain:
    def test_requires_system_somewhere(self, capsys):
        assert main(["simulate"]) == 2
        assert "system" in capsys.readouterr().err

    def test_system_flag_without_params_names_field(self, capsys):
        assert main(["simulate", "--system", "kirchhoff"]) == 2
        assert "a1" in capsys.readouterr().err

    def test_flags_drive_simulate(self, tmp_path):
        path = write_config(tmp_path, KIRCHHOFF_DOC)
        code = main(
            [
                "simulate",
                "--config", path,
                "--eps", "0.1",
                "--steps", "2",
                "--seed", "3",
                "--out", str(tmp_path),
            ]
        )
        assert code == 0
        lines = (tmp_path / "orbit.csv").read_text().splitlines()
        assert len(lines) == 3
