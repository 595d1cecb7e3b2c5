import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmx import cli
from dmx.config import PRESET_NAMES, SimConfig, format_config, parse_config, preset, with_overrides
from dmx.errors import ParseError, UnknownPreset, ValidationError
from dmx.grid import read_snapshot
from dmx.materials import check_passivity, material_matrix, LorentzMaterial

SMALL = """\
grid.x_min = -4
grid.x_max = 4
grid.y_min = -4
grid.y_max = 4
grid.nx = 80
grid.ny = 80
pml.width = 1
medium.obstacle = -1, 1, -2, 2
medium.we = 4
medium.wm = 2
source.center = -2.5, 0
scheme.t_end = 2
output.snapshot_every = 1
output.fields = E3, H1
checks.propagation = true
checks.probe_center = 2, 0
checks.probe_radius = 2
checks.steady_from = 1
"""


class TestParse:
    def test_empty_is_default(self):
        cfg = parse_config("")
        assert cfg == SimConfig()
        assert cfg.medium.rectangles == () and cfg.grid.nx == 360

    def test_experiment_one_keys(self):
        cfg = parse_config("medium.obstacle = -5,5,-10,10\nmedium.we = 4\nmedium.wm = 2\nsource.omega = 5\n")
        r = cfg.medium.rectangles[0]
        # [PAPER] experiment 1 rates
        assert (r.w_e, r.w_m, cfg.source.omega) == (4.0, 2.0, 5.0)
        assert (r.x0, r.x1, r.y0, r.y1) == (-5.0, 5.0, -10.0, 10.0)

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# header\n\nsource.omega = 3  # trailing\n")
        assert cfg.source.omega == 3.0

    def test_repeatable_rect_and_materials(self):
        cfg = parse_config("medium.rect = -1,1,-1,1,2,3\nmedium.rect = 0,1,0,1,1,1,0.1,0.2\n"
                           "material.m.pole = 1,2,0.1\nmaterial.m.pole = 2,0,0.5\nmaterial.m.rel = 2\n")
        assert len(cfg.medium.rectangles) == 2 and cfg.medium.rectangles[1].gamma_m == 0.2
        (name, mat), = cfg.materials
        assert name == "m" and len(mat.poles) == 2 and mat.rel == 2.0

    @pytest.mark.parametrize("text, line", [
        ("grid.nx = 10\nbogus.key = 1\n", 2),
        ("no equals sign\n", 1),
        ("grid.nx = ten\n", 1),
        ("grid.nx = 10\ngrid.nx = 20\n", 2),
        ("source.omega = nan\n", 1),
        ("material.x.color = 1\n", 1),
        ("source.center = 1,2,3\n", 1),
        ("grid.boundary = open\n", 1),
        ("source.waveform = square\n", 1),
    ])
    def test_parse_errors(self, text, line):
        with pytest.raises(ParseError) as err:
            parse_config(text)
        assert err.value.line == line
        assert str(err.value).startswith(f"line {line}: ")

    @pytest.mark.parametrize("text, field", [
        ("scheme.cfl = 1.5\n", "scheme.cfl"),
        ("scheme.cfl = 0\n", "scheme.cfl"),
        ("medium.we = 4\n", "medium.we"),
        ("medium.obstacle = -17,0,-1,1\n", "medium.rect"),
        ("medium.background = 1,0\n", "medium.background"),
        ("pml.width = 20\n", "pml.width"),
        ("output.snapshot_every = 0.001\n", "output.snapshot_every"),
        ("source.a = -1\n", "source"),
        ("grid.nx = 2\n", "grid"),
        ("medium.obstacle = -5,5,-10,10\nmedium.we = 500\n", "scheme.cfl"),
        ("checks.probe_radius = 0\n", "checks.probe_radius"),
    ])
    def test_validation_errors(self, text, field):
        with pytest.raises(ValidationError) as err:
            parse_config(text)
        assert err.value.field == field

    def test_background_allowed_without_pml(self):
        cfg = parse_config("pml.enabled = false\nmedium.background = 1,0\n")
        assert cfg.medium.background == (1.0, 0.0)


class TestRoundTrip:
    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_presets(self, name):
        cfg = preset(name)
        assert parse_config(format_config(cfg)) == cfg

    def test_custom(self):
        cfg = parse_config(SMALL + "material.q.pole = 1,2,0.3\ngrid.boundary = periodic, pec\npml.enabled = 0\n"
                           "source.waveform = step\nsource.t_off = 1.5\noutput.csv = yes\n")
        assert parse_config(format_config(cfg)) == cfg

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, 20.0), st.floats(-5.0, 5.0), st.floats(0.05, 0.95), st.integers(40, 400),
           st.floats(0.0, 3.0))
    def test_numeric_fields(self, omega, amplitude, cfl, nx, gamma):
        cfg = parse_config(f"source.omega = {omega!r}\nsource.amplitude = {amplitude!r}\nscheme.cfl = {cfl!r}\n"
                           f"grid.nx = {nx}\nmedium.obstacle = -5,5,-10,10\nmedium.we = 1\n"
                           f"medium.gamma_e = {gamma!r}\noutput.snapshot_every = 0\n")
        assert parse_config(format_config(cfg)) == cfg


class TestPresets:
    @pytest.mark.parametrize("name, we, wm", [
        ("experiment1", 4.0, 2.0),
        ("experiment2", 6.0, 2.0),
        ("experiment3", 5 * math.sqrt(2), 5 * math.sqrt(2)),
        ("exp3", 5 * math.sqrt(2), 5 * math.sqrt(2)),
    ])
    def test_rates(self, name, we, wm):
        # [PAPER] (w_e, w_m) per experiment with omega* = 5
        cfg = preset(name)
        r, = cfg.medium.rectangles
        assert (r.w_e, r.w_m, cfg.source.omega) == (we, wm, 5.0)
        assert (r.x0, r.x1, r.y0, r.y1) == (-5.0, 5.0, -10.0, 10.0)
        assert cfg.pml.width == 3.0 and cfg.pml_enabled
        assert cfg.source.center == (-10.0, 0.0) and cfg.source.a == 25.0

    def test_unknown(self):
        with pytest.raises(UnknownPreset):
            preset("experiment4")

    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_presets_are_passive(self, name):
        for r in preset(name).medium.rectangles:
            e, h = LorentzMaterial.drude(r.w_e, r.gamma_e), LorentzMaterial.drude(r.w_m, r.gamma_m)
            assert check_passivity(material_matrix(e, h), np.linspace(-20, 20, 64) + 0.01).passive

    def test_with_overrides(self):
        cfg = with_overrides(preset("exp1"), output={"csv": True, "dir": "x"})
        assert cfg.output.csv and cfg.output.dir == "x"
        with pytest.raises(ValidationError):
            with_overrides(cfg, output={"snapshot_every": -1.0})


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


class TestCli:
    def test_print_defaults(self, capsys):
        assert cli.main(["--print-defaults"]) == 0
        assert parse_config(capsys.readouterr().out) == SimConfig()

    def test_no_command(self, capsys):
        assert cli.main([]) == 1

    @pytest.mark.parametrize("argv", [
        ["run"],
        ["run", "--preset", "nope"],
        ["run", "missing.cfg"],
        ["run", "--bogus-flag"],
        ["run", "--preset", "exp1", "--threads", "0"],
        ["run", "--preset", "exp1", "--steps", "-1"],
    ])
    def test_usage_errors(self, argv, capsys):
        assert cli.main(argv) == 1

    def test_preset_and_config_conflict(self, small_cfg):
        assert cli.main(["run", str(small_cfg), "--preset", "exp1"]) == 1

    def test_bad_config_file(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text("scheme.cfl = 1.5\n")
        assert cli.main(["run", str(p)]) == 1
        assert "scheme.cfl" in capsys.readouterr().err

    def test_run_writes_outputs(self, small_cfg, tmp_path, capsys):
        out = tmp_path / "out"
        assert cli.main(["run", str(small_cfg), "--output-dir", str(out), "--strict-checks"]) == 0
        text = capsys.readouterr().out
        assert "check=energy_bound verdict=pass" in text and "check=propagation verdict=pass" in text
        names = sorted(p.name for p in out.iterdir())
        assert {"energy.csv", "checks.txt", "summary.txt", "E3_00000.dmx", "H1_00000.dmx"} <= set(names)
        lines = (out / "energy.csv").read_text().splitlines()
        assert lines[0] == "step,t,em_energy,aux_energy,total_energy,bound"
        cfg = parse_config(SMALL)
        assert len(lines) == 1 + cfg.scheme.n_steps
        snap = read_snapshot(out / "H1_00000.dmx")
        assert snap.data.shape == (80, 81) and snap.t == -0.5 * cfg.scheme.dt

    def test_csv_and_cadence_flags(self, small_cfg, tmp_path):
        out = tmp_path / "csv"
        assert cli.main(["run", str(small_cfg), "--output-dir", str(out), "--csv", "--snapshot-every", "0.5",
                         "--steps", "10"]) == 0
        snaps = sorted(out.glob("E3_*.csv"))
        assert snaps and read_snapshot(snaps[0]).data.shape == (80, 80)

    def test_strict_checks_exit_code(self, small_cfg, tmp_path, monkeypatch):
        from dmx import diagnostics

        monkeypatch.setattr(diagnostics, "regularity_check",
                            lambda ratios, constant=1.5, applicable=True:
                            diagnostics.CheckResult("regularity", "fail", 9.0, constant))
        argv = ["run", str(small_cfg), "--output-dir", str(tmp_path / "o"), "--steps", "20"]
        assert cli.main(argv) == 0
        assert cli.main(argv + ["--strict-checks"]) == 2

    def test_numeric_failure_exit_code(self, tmp_path, capsys):
        p = tmp_path / "blow.cfg"
        p.write_text(SMALL + "source.amplitude = 1e308\n")
        assert cli.main(["run", str(p), "--output-dir", str(tmp_path / "o")]) == 3
        assert "numeric failure" in capsys.readouterr().err

    def test_materials(self, capsys):
        assert cli.main(["materials", "--preset", "exp3"]) == 0
        out = capsys.readouterr().out
        assert "material=rect0 causal=True passive=True" in out

    def test_materials_gain(self, tmp_path, capsys):
        p = tmp_path / "m.cfg"
        p.write_text("material.lossy.pole = 1,2,0.5\n")
        assert cli.main(["materials", str(p)]) == 0
        assert "kk_residual=" in capsys.readouterr().out

    def test_verify(self, capsys):
        assert cli.main(["verify"]) == 0
        out = capsys.readouterr().out
        assert out.count("verdict=pass") == 7 and "verdict=fail" not in out

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "dmx", "--print-defaults"], capture_output=True, text=True)
        assert res.returncode == 0 and "grid.nx = 360" in res.stdout
