"""CLI behavior: configs, exit codes, pinned CSV formats."""

import csv
import json

import numpy as np
import pytest

from nldenoise import imaging as I
from nldenoise.cli import (
    BENCH_HEADER,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    ITERATION_HEADER,
    SPECTRA_HEADER,
    main,
)


def _write_image(path, side=20, seed=0):
    img = I.synthetic_image((side, side), seed=seed)
    noisy = I.add_gaussian_noise(img, I.NoiseSpec(30.0, seed))
    I.save_pgm(path, noisy.clipped())
    return img


class TestConfig:
    def test_dump_config_roundtrip(self, tmp_path, capsys):
        assert main(["train", "--synthetic", "2", "--dump-config"]) == EXIT_OK
        dumped = json.loads(capsys.readouterr().out)
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps(dumped))
        assert main(["train", "--config", str(cfg_file),
                     "--dump-config"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out) == dumped

    def test_flags_override_config(self, tmp_path, capsys):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"sigma": 12.0}))
        main(["denoise", "--config", str(cfg_file), "--sigma", "34.0",
              "--dump-config"])
        assert json.loads(capsys.readouterr().out)["sigma"] == 34.0

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"no_such_key": 1}))
        assert main(["denoise", "--config", str(cfg_file)]) == EXIT_CONFIG

    def test_invalid_json(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text("{not json")
        assert main(["denoise", "--config", str(cfg_file)]) == EXIT_CONFIG

    def test_missing_required_options(self):
        assert main(["denoise"]) == EXIT_CONFIG
        assert main(["train"]) == EXIT_CONFIG
        assert main(["validate", "--synthetic", "1"]) == EXIT_CONFIG


class TestDenoise:
    def test_roundtrip(self, tmp_path, capsys):
        inp = tmp_path / "in.pgm"
        out = tmp_path / "out.pgm"
        clean = _write_image(inp)
        code = main(["denoise", "--input", str(inp), "--output", str(out),
                     "--mode", "exact", "--lam", "0.5", "--sigma", "40",
                     "--patch-size", "5"])
        assert code == EXIT_OK
        den = I.load_pgm(out)
        assert den.shape == (20, 20)
        assert I.ssim(clean, den) > I.ssim(clean, I.load_pgm(inp))

    def test_missing_input_file(self, tmp_path):
        code = main(["denoise", "--input", str(tmp_path / "nope.pgm"),
                     "--output", str(tmp_path / "o.pgm")])
        assert code == EXIT_IO


class TestSpectra:
    def test_eigs_csv_header(self, tmp_path):
        out = tmp_path / "spec.csv"
        code = main(["spectra", "--mode", "eigs", "--n", "40",
                     "--sigmas", "40", "--lambdas", "0.1",
                     "--output", str(out)])
        assert code == EXIT_OK
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == SPECTRA_HEADER
        tags = {r[4] for r in rows[1:]}
        assert {"system", "laplacian", "jacobi"} <= tags
        # 40 eigenvalues per operator tag
        assert len(rows) == 1 + 40 * len(tags)

    def test_iteration_table(self, tmp_path):
        out = tmp_path / "iters.csv"
        code = main(["spectra", "--mode", "iterations", "--shape", "16",
                     "--sigmas", "30", "--lambdas", "1e-3",
                     "--solvers", "deflated-jacobi", "--maxit", "50",
                     "--output", str(out)])
        assert code == EXIT_OK
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ITERATION_HEADER
        assert rows[1][1] == "deflated-jacobi"
        assert rows[1][3] == "1"


class TestBench:
    def test_bench_op_header(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main(["bench-op", "--sizes", "100", "--mode", "exact",
                     "--patch-size", "5", "--repeats", "1",
                     "--output", str(out)])
        assert code == EXIT_OK
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == BENCH_HEADER
        assert rows[1][0] == "100"

    def test_bench_solve_header(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main(["bench-solve", "--sizes", "100", "--mode", "exact",
                     "--patch-size", "5", "--maxit", "200",
                     "--output", str(out)])
        assert code == EXIT_OK
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == BENCH_HEADER
        assert int(rows[1][4]) > 0


class TestTrainValidate:
    def test_synthetic_train_writes_reports(self, tmp_path, capsys):
        report = tmp_path / "rep.json"
        ssim_csv = tmp_path / "ssim.csv"
        code = main(["train", "--synthetic", "2", "--shape", "16",
                     "--patch-size", "5", "--report", str(report),
                     "--ssim-csv", str(ssim_csv)])
        assert code == EXIT_OK
        data = json.loads(report.read_text())
        assert 1e-9 <= data["lambda_opt"] <= 3.0
        assert data["mean_ssim_denoised"] > data["mean_ssim_noisy"]
        lines = ssim_csv.read_text().strip().splitlines()
        assert lines[0] == "image_index,ssim_noisy,ssim_denoised"

    def test_validate_with_lambda(self, capsys):
        code = main(["validate", "--synthetic", "1", "--shape", "16",
                     "--patch-size", "5", "--lam", "0.8"])
        assert code == EXIT_OK
        assert "ssim" in capsys.readouterr().out
