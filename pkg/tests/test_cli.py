import subprocess
import sys

import numpy as np
import pytest

from gmrf_telescope import io
from gmrf_telescope.cli import run
from helpers import write_cli_inputs


@pytest.fixture
def inputs(tmp_path):
    return write_cli_inputs(tmp_path / "in")


def cli(out, *args, seed=None):
    argv = ["--out", str(out)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    return run(argv + [str(a) for a in args])


class TestSubcommands:
    def test_shells(self, tmp_path):
        assert cli(tmp_path, "shells", "--rows", 3, "--cols", 3) == 0
        lines = (tmp_path / "shells.csv").read_text().splitlines()
        assert lines[0] == "shell_index,order_in_shell,row,col"
        assert len(lines) == 1 + 16 + 8 + 1
        assert lines[-1] == "2,0,2,2"

    def test_build(self, tmp_path, inputs):
        assert cli(tmp_path, "build", "--model", inputs / "model.toml") == 0
        A = io.read_csv(tmp_path / "A.csv")
        assert A.shape == (16, 16) and np.array_equal(A, A.T)
        assert io.read_csv(tmp_path / "A_b.csv").shape == (16, 20)
        assert io.read_report(tmp_path / "build_report.txt")["spd"] == "ok"

    def test_build_not_pd(self, tmp_path, capsys):
        io.write_config(tmp_path / "bad.toml", 3, 3, 1.0, {k: 1.0 for k in ("n", "s", "e", "w", "ne", "nw", "se", "sw")})
        assert cli(tmp_path, "build", "--model", tmp_path / "bad.toml") == 1
        err = capsys.readouterr().err
        assert err.count("\n") == 1 and "positive definite" in err

    def test_factorize_identity(self, tmp_path, inputs):
        assert cli(tmp_path, "factorize", "--model", inputs / "identity.toml") == 0
        rep = io.read_report(tmp_path / "manifest.txt")
        assert rep["tau"] == "2" and rep["stage_sizes"] == "20 12 3"
        for k in (1, 2):
            assert not io.read_csv(tmp_path / f"F_{k}.csv").any()
            Q = io.read_csv(tmp_path / f"Q_{k}.csv")
            assert np.array_equal(Q, np.eye(len(Q)))

    def test_sample_seeds(self, tmp_path, inputs):
        assert cli(tmp_path / "a", "sample", "--model", inputs / "model.toml", "--count", 3, seed=10) == 0
        assert cli(tmp_path / "b", "sample", "--model", inputs / "model.toml", seed=12) == 0
        assert (tmp_path / "a" / "sample_2.csv").read_bytes() == (tmp_path / "b" / "sample_0.csv").read_bytes()

    def test_sample_pgm_sidecar(self, tmp_path, inputs):
        assert cli(tmp_path, "sample", "--model", inputs / "model.toml", "--format", "pgm", seed=4) == 0
        img = io.read_pgm(tmp_path / "sample_0.pgm")
        side = io.read_report(tmp_path / "sample_0.txt")
        assert img.min() == 0 and img.max() == 255
        assert cli(tmp_path / "c", "sample", "--model", inputs / "model.toml", seed=4) == 0
        field = io.read_csv(tmp_path / "c" / "sample_0.csv")
        back = float(side["offset"]) + float(side["scale"]) * img
        assert np.max(np.abs(back - field)) <= 0.5 * float(side["scale"]) + 1e-12

    def test_seed_range(self, tmp_path, inputs, capsys):
        assert cli(tmp_path, "sample", "--model", inputs / "model.toml", seed=2**64) == 2
        assert cli(tmp_path, "sample", "--model", inputs / "model.toml", "--count", 2, seed=2**64 - 1) == 1
        assert cli(tmp_path, "sample", "--model", inputs / "model.toml", seed=2**64 - 1) == 0

    def test_estimate_round_trip(self, tmp_path, inputs):
        assert cli(tmp_path, "sample", "--model", inputs / "model.toml", seed=21) == 0
        field = io.read_csv(tmp_path / "sample_0.csv")
        with open(tmp_path / "full.csv", "w") as fh:
            for (i, j), v in np.ndenumerate(field):
                fh.write(f"{i + 1},{j + 1},1,1e-9,{float(v)!r}\n")
        assert cli(tmp_path, "estimate", "--model", inputs / "model.toml", "--obs", tmp_path / "full.csv", "--out", "rt") == 0
        assert np.max(np.abs(io.read_csv(tmp_path / "rt_mean.csv") - field)) < 1e-3

    def test_estimate_outputs(self, tmp_path, inputs):
        assert cli(tmp_path, "estimate", "--model", inputs / "model.toml", "--obs", inputs / "obs.csv") == 0
        for suffix in ("_mean.csv", "_variance.csv", "_boundary_mean.csv", "_report.txt"):
            assert (tmp_path / ("estimate" + suffix)).exists()

    def test_denoise(self, tmp_path, inputs):
        assert cli(tmp_path, "denoise", "--model", inputs / "model.toml", "--in", inputs / "noisy.pgm",
                   "--noise-var", 25, "--ref", inputs / "clean.pgm", "--out", "d.pgm") == 0
        assert io.read_pgm(tmp_path / "d.pgm").shape == (4, 4)
        rep = io.read_report(tmp_path / "d_report.txt")
        assert {"mse_in", "mse_out", "mean_offset"} <= set(rep)

    def test_denoise_size_mismatch(self, tmp_path, inputs, capsys):
        code = cli(tmp_path, "denoise", "--model", inputs / "model.toml", "--in", inputs / "wrong.pgm", "--noise-var", 1)
        assert code == 1
        err = capsys.readouterr().err
        assert "4x4" in err and err.count("\n") == 1

    def test_verify(self, tmp_path):
        assert cli(tmp_path, "verify") == 0
        rep = io.read_report(tmp_path / "verify_report.txt")
        assert rep["all_passed"] == "yes"
        assert rep["fd_step_mu"] == "1.0000000000000001e-05"
        assert all(v.startswith("pass") for k, v in rep.items() if "[" in k or k.startswith(("bb_", "whittle_")))

    def test_surfaces(self, tmp_path):
        assert cli(tmp_path, "surfaces", "--kind", "shifted", "--center", 0.3, 0.2, "--levels", 4, "--samples", 64) == 0
        rep = io.read_report(tmp_path / "surfaces_report.txt")
        assert rep["P1"] == "pass" and rep["P3"] == "pass"
        rows = (tmp_path / "surfaces.csv").read_text().splitlines()
        assert rows[0] == "level,lambda,index,x,y" and len(rows) == 1 + 5 * 64
        assert (tmp_path / "surfaces.svg").read_text().startswith("<svg")

    def test_surfaces_polygon(self, tmp_path, inputs, capsys):
        assert cli(tmp_path, "surfaces", "--polygon", inputs / "square.csv", "--center", 1, 1, "--levels", 4) == 0
        assert cli(tmp_path, "surfaces", "--polygon", inputs / "square.csv", "--center", 3, 1) == 1
        assert cli(tmp_path, "surfaces", "--polygon", inputs / "square.csv") == 1


class TestErrors:
    def test_usage(self, tmp_path):
        assert run(["bogus"]) == 2
        assert run([]) == 2
        assert run(["shells", "--rows", "0", "--cols", "2"]) == 2
        assert run(["--seed", "abc", "verify"]) == 2

    def test_missing_file(self, tmp_path, capsys):
        assert cli(tmp_path, "factorize", "--model", tmp_path / "nope.toml") == 1
        assert capsys.readouterr().err.count("\n") == 1

    def test_malformed_config(self, tmp_path, capsys):
        (tmp_path / "m.toml").write_text("n_rows = = 3\n")
        assert cli(tmp_path, "build", "--model", tmp_path / "m.toml") == 1
        assert "malformed" in capsys.readouterr().err

    def test_console_script(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "gmrf_telescope.cli", "--out", str(tmp_path),
                               "shells", "--rows", "2", "--cols", "2"], capture_output=True)
        assert proc.returncode == 0
        proc = subprocess.run([sys.executable, "-m", "gmrf_telescope.cli", "nope"], capture_output=True)
        assert proc.returncode == 2
