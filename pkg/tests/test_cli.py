import csv
import io
import json

import numpy as np
import pytest

from src.cli.main import COMMANDS, build_arg_parser, main, parse_complex, parse_range

# i·diag(1/2, 1/2) as [re, im] pairs
ROTATED_OSCILLATOR_Q = [[[0.0, 0.5], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.5]]]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestParsers:
    def test_complex(self):
        assert parse_complex("1,0.25") == 1 + 0.25j
        assert parse_complex("0.5") == 0.5

    def test_range(self):
        assert parse_range("10,12") == range(10, 13)

    def test_usage_error_exits_one(self, capsys):
        code, _, _ = run(capsys, "resolvent", "--config", "x.json", "--z", "a,b")
        assert code == 1

    def test_help(self):
        assert "sweep" in build_arg_parser().format_help()


class TestExampleCommand:
    def test_degree_four(self, capsys, tmp_path):
        code, out, _ = run(capsys, "example", "--m", "4", "--output", str(tmp_path / "ex.json"))
        assert code == 0
        assert "11984" in out
        assert out.strip().endswith("PASS")
        assert json.loads((tmp_path / "ex.json").read_text())["closed_form"] == 11984

    def test_out_of_range(self, capsys):
        code, _, err = run(capsys, "example", "--m", "0")
        assert code == 1
        assert "error:" in err


class TestSpectrumCommand:
    def test_lists_points(self, capsys, write_config, oscillator_config):
        path = write_config(oscillator_config)
        code, out, _ = run(capsys, "spectrum", "--config", str(path), "--radius", "0.55")
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 6
        re, im, mult = lines[0].split()
        assert float(re) == pytest.approx(0.05)
        assert float(im) == pytest.approx(0.0)
        assert mult == "1"

    def test_csv_output(self, capsys, tmp_path, write_config, jordan_config):
        path = write_config(jordan_config)
        out_path = tmp_path / "spec.csv"
        code, _, _ = run(
            capsys, "spectrum", "--config", str(path), "--radius", "1", "--output", str(out_path)
        )
        assert code == 0
        rows = list(csv.DictReader(out_path.open()))
        assert [r["multiplicity"] for r in rows] == ["1", "2", "3", "4"]

    def test_missing_config(self, capsys, tmp_path):
        code, _, err = run(capsys, "spectrum", "--config", str(tmp_path / "none.json"))
        assert code == 1
        assert "not found" in err

    def test_h_below_minimum(self, capsys, write_config, oscillator_config):
        path = write_config(oscillator_config)
        code, _, _ = run(capsys, "spectrum", "--config", str(path), "--h", "0.001", "--radius", "1")
        assert code == 1


class TestNormalFormCommand:
    def test_oscillator_report(self, capsys, write_config):
        path = write_config({"form": {"n": 1, "Q": [[0.5, 0.0], [0.0, 0.5]]}, "h_values": [0.1]})
        code, out, _ = run(capsys, "normal-form", "--config", str(path))
        assert code == 0
        report = json.loads(out)
        assert report["n"] == 1
        assert report["C1"] == pytest.approx(4.0)
        assert report["M"][0][0] == pytest.approx([0.0, 1.0], abs=1e-12)

    def test_not_elliptic_is_numerical_failure(self, capsys, write_config):
        path = write_config({"form": {"n": 1, "Q": [[0.5, 0.0], [0.0, -0.5]]}, "h_values": [0.1]})
        code, _, err = run(capsys, "normal-form", "--config", str(path))
        assert code == 2
        assert "numerical failure" in err

    def test_requires_form(self, capsys, write_config, oscillator_config):
        path = write_config(oscillator_config)
        code, _, _ = run(capsys, "normal-form", "--config", str(path))
        assert code == 1


class TestSweepCommands:
    def test_resolvent(self, capsys, write_config, oscillator_config):
        path = write_config(oscillator_config)
        code, out, _ = run(capsys, "resolvent", "--config", str(path), "--z", "0.2,0")
        assert code == 0
        row = json.loads(out)
        assert row["resnorm_flat"] == pytest.approx(20.0)
        assert row["dist_spec"] == pytest.approx(0.05)

    def test_sweep_csv(self, capsys, write_config, oscillator_config):
        config = dict(
            oscillator_config,
            z_grid={"re_min": 0.2, "re_max": 0.3, "im_min": 0.1, "im_max": 0.1, "nx": 2},
        )
        path = write_config(config)
        code, out, _ = run(capsys, "sweep", "--config", str(path), "--max-degree", "12")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 2
        assert [float(r["z_re"]) for r in rows] == pytest.approx([0.2, 0.3])
        assert all(r["converged"] == "true" for r in rows)

    def test_sweep_files(self, capsys, tmp_path, write_config, oscillator_config):
        config = dict(
            oscillator_config,
            output={"csv": str(tmp_path / "rows.csv"), "json": str(tmp_path / "rows.json")},
        )
        code, out, _ = run(capsys, "sweep", "--config", str(write_config(config)))
        assert code == 0
        assert out == ""
        assert (tmp_path / "rows.csv").exists()
        assert json.loads((tmp_path / "rows.json").read_text())["metadata"]["C0"] == 1.0

    def test_scaling_example(self, capsys):
        code, out, _ = run(capsys, "scaling", "--example", "--m-range", "10,20")
        assert code == 0
        fits = json.loads(out)["fits"]
        assert set(fits) == {"inv_h", "inv_h_log"}
        assert fits["inv_h_log"]["points_used"] == 11

    def test_scaling_needs_config(self, capsys):
        code, _, _ = run(capsys, "scaling", "--model", "inv_h")
        assert code == 1

    def test_scaling_too_few_h(self, capsys, write_config, oscillator_config):
        path = write_config(oscillator_config)
        code, _, err = run(capsys, "scaling", "--config", str(path), "--model", "inv_h")
        assert code == 2
        assert "at least 3" in err

    def test_scaling_adds_distance_fit_in_gram_mode(self, capsys, write_config, oscillator_config):
        config = dict(oscillator_config, norm_mode="gram", h_values=[0.2, 0.1, 0.05])
        code, out, _ = run(
            capsys, "scaling", "--config", str(write_config(config)), "--model", "inv_h"
        )
        assert code == 0
        fits = json.loads(out)["fits"]
        assert set(fits) == {"inv_h", "gram_dist_inv_h"}
        # normal input: resnorm·dist is exactly one
        assert fits["gram_dist_inv_h"]["A"] == pytest.approx(0.0, abs=1e-8)

    def test_projection(self, capsys, write_config, oscillator_config):
        path = write_config(oscillator_config)
        code, out, _ = run(
            capsys, "projection", "--config", str(path), "--z", "0.25", "--radius", "0.05"
        )
        assert code == 0
        result = json.loads(out)
        assert result["rank"] == 1
        assert result["norm"] == pytest.approx(1.0)


class TestRotatedForm:
    def test_spectrum_of_rotated_oscillator(self, capsys, write_config):
        # q = i(x² + ξ²)/2 has eigenvalues i·h(k + 1/2)
        path = write_config({"form": {"n": 1, "Q": ROTATED_OSCILLATOR_Q}})
        code, out, _ = run(
            capsys, "spectrum", "--config", str(path), "--h", "0.1", "--radius", "0.55"
        )
        assert code == 0
        lines = [line.split() for line in out.splitlines()]
        values = sorted((complex(float(re), float(im)) for re, im, _ in lines), key=abs)
        assert values == pytest.approx([0.05j, 0.15j, 0.25j, 0.35j, 0.45j, 0.55j], abs=1e-9)

    def test_resolvent_at_rotated_point(self, capsys, write_config):
        path = write_config({"form": {"n": 1, "Q": ROTATED_OSCILLATOR_Q}})
        code, out, _ = run(
            capsys, "resolvent", "--config", str(path), "--h", "0.1", "--z", "0,0.2"
        )
        assert code == 0
        row = json.loads(out)
        assert row["dist_spec"] == pytest.approx(0.05)
        assert row["resnorm_flat"] == pytest.approx(20.0)


class TestDumpBlocks:
    def test_writes_one_file_per_degree(self, capsys, tmp_path, write_config, jordan_config):
        path = write_config(dict(jordan_config, N_max=4, norm_mode="gram"))
        out_dir = tmp_path / "blocks"
        code, out, _ = run(
            capsys, "resolvent", "--config", str(path), "--dump-blocks", str(out_dir)
        )
        assert code == 0
        N_used = json.loads(out)["N_used"]
        names = sorted(p.name for p in out_dir.iterdir())
        assert names == [f"block_m{m:03d}.txt" for m in range(N_used)] + ["gram.txt"]
        assert (out_dir / "block_m002.txt").read_text().splitlines()[0] == "3 3"


class TestExitCodes:
    def test_linear_algebra_failure_is_numerical(self, capsys, monkeypatch):
        def fail(args):
            raise np.linalg.LinAlgError("Singular matrix")

        monkeypatch.setitem(COMMANDS, "example", fail)
        code, _, err = run(capsys, "example")
        assert code == 2
        assert "numerical failure" in err
