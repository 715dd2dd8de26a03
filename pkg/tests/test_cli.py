import hashlib
import os
from pathlib import Path

import numpy as np
import pytest

from accordion.cli import main
from accordion.runfiles import read_config, read_manifest, read_pgm, write_pgm


def parse_keyvals(text):
    out = {}
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 2:
            out[parts[0]] = parts[1]
    return out


def dir_digest(path):
    chunks = []
    for p in sorted(Path(path).rglob("*")):
        if p.is_file():
            chunks.append(p.name.encode())
            chunks.append(hashlib.sha256(p.read_bytes()).digest())
    return hashlib.sha256(b"".join(chunks)).hexdigest()


class TestSpacingCommand:
    def test_reference_configuration(self, capsys):
        assert main(["spacing", "--wavelength", "0.532", "--focal", "30000",
                     "--separation", "19250"]) == 0
        vals = parse_keyvals(capsys.readouterr().out)
        assert float(vals["spacing_fourier_um"]) == pytest.approx(0.8291, abs=1e-4)
        assert float(vals["spacing_thin_lens_um"]) == pytest.approx(0.8707, abs=1e-4)
        assert float(vals["thin_lens_ratio"]) == pytest.approx(1.0502, abs=1e-4)
        assert float(vals["beam_angle_deg"]) == pytest.approx(37.4, abs=0.05)

    def test_target_spacing_inversion(self, capsys):
        assert main(["spacing", "--wavelength", "0.532", "--focal", "80000",
                     "--separation", "43810", "--target-spacing", "11.2"]) == 0
        vals = parse_keyvals(capsys.readouterr().out)
        assert float(vals["separation_for_target_um"]) == pytest.approx(3800.0, abs=0.5)

    def test_missing_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["spacing", "--wavelength", "0.532"])
        assert exc.value.code == 2

    def test_domain_error_exit_code(self, capsys):
        # D >= 2f
        assert main(["spacing", "--wavelength", "0.532", "--focal", "1000",
                     "--separation", "2000"]) == 2


class TestSensitivityCommand:
    def test_reference_deviation(self, capsys):
        assert main(["sensitivity", "--spacing", "10",
                     "--deviations", "2.13,0,0.266"]) == 0
        lines = [l.split() for l in capsys.readouterr().out.splitlines()
                 if l and not l.startswith("#") and not l.startswith("  dev")]
        rows = [list(map(float, l)) for l in lines if l[0][0].isdigit() or l[0][0] == '-']
        dev, path, fringes, shift, mirror = rows[0]
        assert path == pytest.approx(4.26)
        assert fringes == pytest.approx(8.0075, abs=0.005)
        assert shift == pytest.approx(80.075, abs=0.05)
        assert mirror == 0.0
        assert rows[1] == [0.0, 0.0, 0.0, 0.0, 0.0]
        assert rows[2][2] == pytest.approx(1.0, abs=1e-3)  # half-wave deviation

    def test_bad_spacing_rejected(self, capsys):
        assert main(["sensitivity", "--spacing", "-1", "--deviations", "1"]) == 2


class TestSweepCommand:
    def test_single_frame_preset(self, tmp_path, capsys):
        out = tmp_path / "fig4a"
        assert main(["sweep", "--preset", "fig4a", "--out", str(out)]) == 0
        assert (out / "frame_0000.pgm").exists()
        assert (out / "manifest.csv").exists()
        assert (out / "config.txt").exists()
        assert not (out / "composite.pgm").exists()  # single frame
        records = read_manifest(out / "manifest.csv")
        assert len(records) == 1
        assert records[0].separation_um == 19250.0
        cfgvals = read_config(out / "config.txt")
        assert cfgvals["focal"] == "30000.0"
        assert cfgvals["waist2"] == "40.0"

    def test_ladder_preset_writes_composite(self, tmp_path):
        out = tmp_path / "fig4b"
        assert main(["sweep", "--preset", "fig4b", "--out", str(out)]) == 0
        records = read_manifest(out / "manifest.csv")
        assert [r.separation_um for r in records] == \
            [19250.0, 17000.0, 14000.0, 11000.0, 8000.0, 5000.0]
        comp = read_pgm(out / "composite.pgm")
        assert comp.shape == (6, 640)

    def test_slow_preset_duration(self, tmp_path):
        out = tmp_path / "fig6a"
        assert main(["sweep", "--preset", "fig6a", "--out", str(out)]) == 0
        records = read_manifest(out / "manifest.csv")
        assert len(records) == 136
        assert records[-1].time_s == pytest.approx(4.5)
        assert min(r.separation_um for r in records) == pytest.approx(3810.0)

    def test_seeded_rerun_is_byte_identical(self, tmp_path):
        args = ["sweep", "--separations", "19250,12000,8000", "--focal", "30000",
                "--read-noise", "2", "--seed", "7"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        assert dir_digest(tmp_path / "a") == dir_digest(tmp_path / "b")

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("focal=30000\nseparations=19250,12000\nread_noise=1.5\n")
        out = tmp_path / "run"
        assert main(["sweep", "--config", str(cfg), "--focal", "80000",
                     "--out", str(out)]) == 0
        echoed = read_config(out / "config.txt")
        assert echoed["focal"] == "80000.0"       # flag wins
        assert echoed["read_noise"] == "1.5"      # file value kept
        assert len(read_manifest(out / "manifest.csv")) == 2

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("focal=30000\nnonsense=1\n")
        assert main(["sweep", "--config", str(cfg)]) == 2

    def test_env_var_sets_default_output_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ACCORDION_OUT_DIR", str(tmp_path / "elsewhere"))
        assert main(["sweep", "--preset", "fig4a"]) == 0
        assert (tmp_path / "elsewhere" / "fig4a" / "manifest.csv").exists()


@pytest.fixture(scope="module")
def ladder_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "ladder"
    assert main(["sweep", "--preset", "fig4b", "--read-noise", "2",
                 "--seed", "5", "--out", str(out)]) == 0
    return out


class TestAnalyzeCommand:
    def test_run_directory_measurements(self, ladder_run, capsys):
        assert main(["analyze", str(ladder_run)]) == 0
        out = capsys.readouterr().out
        assert "period range" in out
        csv_path = ladder_run / "measurements.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0] == ("frame,time_s,separation_um,period_px,period_um,"
                            "center_um,contrast")
        assert len(lines) == 7
        # every cell must parse as a plain number (no numpy reprs)
        for line in lines[1:]:
            for cell in line.split(",")[1:]:
                float(cell)
        # round trip: measured period_um vs manifest analytic spacing
        records = read_manifest(ladder_run / "manifest.csv")
        for line, rec in zip(lines[1:], records):
            period_um = float(line.split(",")[4])
            assert period_um == pytest.approx(rec.analytic_spacing_um, rel=5e-3)

    def test_calibrate_recovers_pixel_scale(self, ladder_run, capsys):
        assert main(["analyze", str(ladder_run), "--calibrate"]) == 0
        out = capsys.readouterr().out
        assert "pixel scale" in out
        first = (ladder_run / "calibration.csv").read_text().splitlines()[1]
        scale = float(first.split(",")[0])
        assert scale == pytest.approx(0.0853, abs=5e-4)

    def test_single_image(self, ladder_run, capsys):
        assert main(["analyze", str(ladder_run / "frame_0000.pgm"),
                     "--pixel-scale", "0.0853"]) == 0
        out = capsys.readouterr().out
        assert "period_um" in out and "contrast" in out

    def test_single_image_without_scale_flags_pixels(self, ladder_run, capsys):
        assert main(["analyze", str(ladder_run / "frame_0000.pgm")]) == 0
        assert "pixel units" in capsys.readouterr().out

    def test_uniform_image_fails_with_no_fringe(self, tmp_path, capsys):
        write_pgm(tmp_path / "flat.pgm", np.full((64, 256), 40, np.uint8))
        assert main(["analyze", str(tmp_path / "flat.pgm")]) == 1
        assert "no fringe" in capsys.readouterr().err

    def test_uniform_frame_in_run_listed_and_nonzero(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["sweep", "--separations", "19250,12000", "--focal", "30000",
                     "--out", str(out)]) == 0
        write_pgm(out / "frame_0001.pgm",
                  np.full((120, 640), 40, np.uint8))  # overwrite with a flat frame
        assert main(["analyze", str(out)]) == 1
        err = capsys.readouterr().err
        assert "frame_0001.pgm" in err and "no fringe" in err

    def test_missing_target_is_usage_error(self, tmp_path, capsys):
        assert main(["analyze", str(tmp_path / "nope")]) == 2
