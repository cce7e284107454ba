"""Command-line interface.

Subcommands: denoise, train, validate, spectra, bench-op, bench-solve.
Options come from built-in defaults, overridden by a JSON config file
(``--config``), overridden by command-line flags.  ``--dump-config`` prints
the effective configuration as JSON and exits, so a run can be reproduced
from its dump.

Exit codes: 0 success, 2 bad configuration, 3 file I/O failure,
4 solver or optimizer did not converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import bilevel, imaging, spectral
from ._kernels import backend_name
from .errors import ConfigError, NldenoiseError, PgmError
from .features import feature_windows
from .kernel import AnovaOperator
from .linops import ShiftedSystem, deflated_solve, plain_solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NO_CONVERGENCE = 4

BENCH_HEADER = ["n", "setup_ms", "apply_ms", "total_ms", "iters", "residual"]
SPECTRA_HEADER = ["sigma", "lambda", "eig_index", "value", "operator_tag"]
ITERATION_HEADER = ["lambda", "solver", "iterations", "converged"]

DEFAULTS = {
    "denoise": {
        "input": None, "output": None, "lam": 0.1, "mu": 0.01,
        "sigma": 40.0, "patch_size": 7, "mode": "fast", "prec": "jacobi",
        "tol": 1e-8, "maxit": 100,
    },
    "train": {
        "manifest": None, "synthetic": 0, "shape": 64, "noise_sigma": 30.0,
        "seed": 0, "mu": 0.01, "sigma": 40.0, "patch_size": 7,
        "mode": "exact", "lambda_min": 1e-9, "lambda_max": 3.0,
        "brent_tol": 1e-10, "brent_maxit": 30, "inner_tol": 1e-10,
        "inner_maxit": 25, "report": None, "ssim_csv": None,
    },
    "validate": {
        "manifest": None, "synthetic": 0, "shape": 64, "noise_sigma": 30.0,
        "seed": 1000, "lam": None, "mu": 0.01, "sigma": 40.0,
        "patch_size": 7, "mode": "exact", "inner_tol": 1e-10,
        "inner_maxit": 25, "report": None, "ssim_csv": None,
    },
    "spectra": {
        "mode": "eigs", "n": 128, "seed": 0, "sigmas": [40.0],
        "lambdas": [0.1], "mu": 0.01, "patch_size": 7, "shape": 0,
        "solvers": ["none", "jacobi", "l2", "deflated-none",
                    "deflated-jacobi", "deflated-l2"],
        "tol": 1e-8, "maxit": 30, "output": None,
    },
    "bench-op": {
        "sizes": [4096, 8192], "sigma": 40.0, "patch_size": 7, "seed": 0,
        "mode": "fast", "repeats": 3, "output": None,
    },
    "bench-solve": {
        "sizes": [1024, 2048], "sigma": 40.0, "patch_size": 7, "seed": 0,
        "mode": "fast", "lam": 0.1, "mu": 0.01, "prec": "jacobi",
        "tol": 1e-8, "maxit": 100, "output": None,
    },
}


def _apply_thread_cap():
    cap = os.environ.get("NLDENOISE_THREADS", "")
    if not cap:
        return
    try:
        n = max(1, int(cap))
    except ValueError:
        raise ConfigError(f"NLDENOISE_THREADS must be an integer, got {cap!r}")
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def _parse_args(argv):
    parser = argparse.ArgumentParser(prog="nldenoise")
    parser.add_argument("--version", action="version", version="nldenoise 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--dump-config", action="store_true",
                       help="print the effective config as JSON and exit")

    p = sub.add_parser("denoise", help="denoise a PGM image")
    add_common(p)
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--patch-size", type=int, dest="patch_size")
    p.add_argument("--mode", choices=["fast", "exact"])
    p.add_argument("--prec", choices=["none", "jacobi", "l2"])
    p.add_argument("--tol", type=float)
    p.add_argument("--maxit", type=int)

    for name in ("train", "validate"):
        p = sub.add_parser(name)
        add_common(p)
        p.add_argument("--manifest")
        p.add_argument("--synthetic", type=int,
                       help="use N synthetic images instead of a manifest")
        p.add_argument("--shape", type=int)
        p.add_argument("--noise-sigma", type=float, dest="noise_sigma")
        p.add_argument("--seed", type=int)
        p.add_argument("--mu", type=float)
        p.add_argument("--sigma", type=float)
        p.add_argument("--patch-size", type=int, dest="patch_size")
        p.add_argument("--mode", choices=["fast", "exact"])
        p.add_argument("--inner-tol", type=float, dest="inner_tol")
        p.add_argument("--inner-maxit", type=int, dest="inner_maxit")
        p.add_argument("--report")
        p.add_argument("--ssim-csv", dest="ssim_csv")
        if name == "train":
            p.add_argument("--lambda-min", type=float, dest="lambda_min")
            p.add_argument("--lambda-max", type=float, dest="lambda_max")
            p.add_argument("--brent-tol", type=float, dest="brent_tol")
            p.add_argument("--brent-maxit", type=int, dest="brent_maxit")
        else:
            p.add_argument("--lam", type=float)

    p = sub.add_parser("spectra", help="dense spectra and iteration tables")
    add_common(p)
    p.add_argument("--mode", choices=["eigs", "iterations"])
    p.add_argument("--n", type=int)
    p.add_argument("--shape", type=int,
                   help="use a synthetic image of this side instead of "
                        "random features")
    p.add_argument("--seed", type=int)
    p.add_argument("--sigmas", type=float, nargs="+")
    p.add_argument("--lambdas", type=float, nargs="+")
    p.add_argument("--mu", type=float)
    p.add_argument("--patch-size", type=int, dest="patch_size")
    p.add_argument("--solvers", nargs="+")
    p.add_argument("--tol", type=float)
    p.add_argument("--maxit", type=int)
    p.add_argument("--output")

    for name in ("bench-op", "bench-solve"):
        p = sub.add_parser(name)
        add_common(p)
        p.add_argument("--sizes", type=int, nargs="+")
        p.add_argument("--sigma", type=float)
        p.add_argument("--patch-size", type=int, dest="patch_size")
        p.add_argument("--seed", type=int)
        p.add_argument("--mode", choices=["fast", "exact"])
        p.add_argument("--output")
        if name == "bench-op":
            p.add_argument("--repeats", type=int)
        else:
            p.add_argument("--lam", type=float)
            p.add_argument("--mu", type=float)
            p.add_argument("--prec", choices=["none", "jacobi", "l2"])
            p.add_argument("--tol", type=float)
            p.add_argument("--maxit", type=int)

    return parser.parse_args(argv)


def _effective_config(args) -> dict:
    cfg = dict(DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(
                f"unknown config keys for {args.command}: {sorted(unknown)}"
            )
        cfg.update(loaded)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _write_csv(path, header, rows):
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()


def _training_set(cfg) -> bilevel.TrainingSet:
    kwargs = dict(
        patch_size=cfg["patch_size"], sigma=cfg["sigma"], mu=cfg["mu"],
        kernel_mode=cfg["mode"], inner_tol=cfg["inner_tol"],
        inner_maxit=cfg["inner_maxit"],
    )
    if cfg.get("synthetic"):
        shape = (cfg["shape"], cfg["shape"])
        images = [
            imaging.synthetic_image(shape, seed=cfg["seed"] + 10 * i)
            for i in range(cfg["synthetic"])
        ]
        noise = imaging.NoiseSpec(cfg["noise_sigma"], cfg["seed"])
        return bilevel.TrainingSet.from_clean_images(images, noise, **kwargs)
    if not cfg.get("manifest"):
        raise ConfigError("either --manifest or --synthetic is required")
    return bilevel.TrainingSet.from_manifest(cfg["manifest"], **kwargs)


def _cmd_denoise(cfg) -> int:
    if not cfg["input"] or not cfg["output"]:
        raise ConfigError("denoise needs --input and --output")
    img = imaging.load_pgm(cfg["input"])
    feats, wins = feature_windows(img, cfg["patch_size"])
    op = AnovaOperator(feats, wins, cfg["sigma"], mode=cfg["mode"])
    system = ShiftedSystem(op, cfg["lam"], cfg["mu"])
    res = deflated_solve(system, img.ravel(), prec=cfg["prec"],
                         tol=cfg["tol"], maxit=cfg["maxit"])
    out = imaging.GrayImage(res.x.reshape(img.shape), img.maxval)
    imaging.save_pgm(cfg["output"], out.clipped())
    print(f"iterations={res.iterations} converged={res.converged} "
          f"residual={res.relative_residual:.3e}")
    return EXIT_OK if res.converged else EXIT_NO_CONVERGENCE


def _cmd_train(cfg) -> int:
    ts = _training_set(cfg)
    report = bilevel.train(
        ts, lambda_range=(cfg["lambda_min"], cfg["lambda_max"]),
        tol=cfg["brent_tol"], maxit=cfg["brent_maxit"],
    )
    print(f"lambda_opt={report.lambda_opt:.8g} "
          f"objective={report.objective_opt:.6g} "
          f"brent_iterations={report.brent_iterations} "
          f"ssim {report.mean_ssim_noisy():.4f} -> "
          f"{report.mean_ssim_denoised():.4f}")
    if cfg["report"]:
        report.to_json(cfg["report"])
    if cfg["ssim_csv"]:
        report.ssim_csv(cfg["ssim_csv"])
    return EXIT_OK if report.brent_converged else EXIT_NO_CONVERGENCE


def _cmd_validate(cfg) -> int:
    if cfg["lam"] is None:
        raise ConfigError("validate needs --lam (a learned fidelity weight)")
    ts = _training_set(cfg)
    report = bilevel.validate(ts, cfg["lam"])
    print(f"lambda={report.lambda_opt:.8g} "
          f"objective={report.objective_opt:.6g} "
          f"ssim {report.mean_ssim_noisy():.4f} -> "
          f"{report.mean_ssim_denoised():.4f}")
    if cfg["report"]:
        report.to_json(cfg["report"])
    if cfg["ssim_csv"]:
        report.ssim_csv(cfg["ssim_csv"])
    return EXIT_OK


def _spectra_problem(cfg):
    if cfg["shape"]:
        img = imaging.synthetic_image((cfg["shape"], cfg["shape"]),
                                      seed=cfg["seed"])
        noisy = imaging.add_gaussian_noise(img, imaging.NoiseSpec(
            30.0, cfg["seed"]))
        feats, wins = feature_windows(noisy, cfg["patch_size"])
        return feats, wins
    rng = np.random.default_rng(cfg["seed"])
    feats = rng.uniform(0, 255, size=(cfg["n"], 3))
    return feats, [np.arange(3)]


def _cmd_spectra(cfg) -> int:
    feats, wins = _spectra_problem(cfg)
    if cfg["mode"] == "eigs":
        rows = []
        for sigma in cfg["sigmas"]:
            op = AnovaOperator(feats, wins, sigma, mode="exact")
            for lam in cfg["lambdas"]:
                _, eta, lap, a_mat = spectral.dense_system(op, lam, cfg["mu"])
                tagged = {"system": a_mat, "laplacian": lap}
                d = 1.0 / np.sqrt(lam + cfg["mu"] * eta)
                tagged["jacobi"] = d[:, None] * a_mat * d[None, :]
                for tag, mat in tagged.items():
                    for i, val in enumerate(spectral.eig_symmetric(mat)):
                        rows.append([sigma, lam, i, f"{val:.12e}", tag])
        _write_csv(cfg["output"], SPECTRA_HEADER, rows)
        return EXIT_OK
    if cfg["mode"] != "iterations":
        raise ConfigError(f"unknown spectra mode {cfg['mode']!r}")
    rows = []
    all_converged = True
    for sigma in cfg["sigmas"]:
        op = AnovaOperator(feats, wins, sigma, mode="exact")
        for lam in cfg["lambdas"]:
            system = ShiftedSystem(op, lam, cfg["mu"])
            f = feats[:, 0] if feats.shape[1] else feats.ravel()
            for solver in cfg["solvers"]:
                if solver.startswith("deflated-"):
                    res = deflated_solve(system, f, prec=solver[9:],
                                         tol=cfg["tol"], maxit=cfg["maxit"])
                else:
                    res = plain_solve(system, f, prec=solver,
                                      tol=cfg["tol"], maxit=cfg["maxit"])
                rows.append([lam, solver, res.iterations, int(res.converged)])
                all_converged = all_converged and res.converged
    _write_csv(cfg["output"], ITERATION_HEADER, rows)
    return EXIT_OK if all_converged else EXIT_NO_CONVERGENCE


def _bench_features(n, patch_size, seed):
    side = int(np.ceil(np.sqrt(n)))
    img = imaging.synthetic_image((side, side), seed=seed)
    noisy = imaging.add_gaussian_noise(img, imaging.NoiseSpec(30.0, seed))
    feats, wins = feature_windows(noisy, patch_size)
    return feats[:n], wins, noisy.ravel()[:n]


def _cmd_bench_op(cfg) -> int:
    rows = []
    rng = np.random.default_rng(cfg["seed"])
    for n in cfg["sizes"]:
        feats, wins, _ = _bench_features(n, cfg["patch_size"], cfg["seed"])
        t0 = time.perf_counter()
        op = AnovaOperator(feats, wins, cfg["sigma"], mode=cfg["mode"])
        v = rng.standard_normal(n)
        op.apply(v)  # builds plans / dense matrix
        t1 = time.perf_counter()
        times = []
        for _ in range(cfg["repeats"]):
            ta = time.perf_counter()
            op.apply(v)
            times.append(time.perf_counter() - ta)
        apply_ms = 1e3 * min(times)
        rows.append([n, f"{1e3 * (t1 - t0):.3f}", f"{apply_ms:.3f}",
                     f"{1e3 * (t1 - t0) + apply_ms:.3f}", "", ""])
    _write_csv(cfg["output"], BENCH_HEADER, rows)
    return EXIT_OK


def _cmd_bench_solve(cfg) -> int:
    rows = []
    all_converged = True
    for n in cfg["sizes"]:
        feats, wins, f = _bench_features(n, cfg["patch_size"], cfg["seed"])
        t0 = time.perf_counter()
        op = AnovaOperator(feats, wins, cfg["sigma"], mode=cfg["mode"])
        system = ShiftedSystem(op, cfg["lam"], cfg["mu"])
        t1 = time.perf_counter()
        res = deflated_solve(system, f, prec=cfg["prec"], tol=cfg["tol"],
                             maxit=cfg["maxit"])
        t2 = time.perf_counter()
        rows.append([n, f"{1e3 * (t1 - t0):.3f}", f"{1e3 * (t2 - t1):.3f}",
                     f"{1e3 * (t2 - t0):.3f}", res.iterations,
                     f"{res.relative_residual:.3e}"])
        all_converged = all_converged and res.converged
    _write_csv(cfg["output"], BENCH_HEADER, rows)
    return EXIT_OK if all_converged else EXIT_NO_CONVERGENCE


_COMMANDS = {
    "denoise": _cmd_denoise,
    "train": _cmd_train,
    "validate": _cmd_validate,
    "spectra": _cmd_spectra,
    "bench-op": _cmd_bench_op,
    "bench-solve": _cmd_bench_solve,
}


def main(argv=None) -> int:
    args = _parse_args(sys.argv[1:] if argv is None else argv)
    try:
        _apply_thread_cap()
        cfg = _effective_config(args)
        if args.dump_config:
            print(json.dumps(cfg, indent=2))
            return EXIT_OK
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PgmError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NldenoiseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
