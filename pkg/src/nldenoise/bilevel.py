"""Bilevel learning of the fidelity weight lambda.

The upper level minimizes the mean squared distance between denoised and
clean training images over lambda with Brent's method (golden section plus
parabolic interpolation); the lower level solves the shifted Laplacian
system for each candidate lambda with the deflated Jacobi-preconditioned
conjugate gradient solver.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import feature_windows
from .imaging import GrayImage, NoiseSpec, add_gaussian_noise, load_pgm, ssim
from .kernel import AnovaOperator
from .linops import ShiftedSystem, deflated_solve

GOLDEN = 0.5 * (3.0 - np.sqrt(5.0))

DEFAULT_LAMBDA_RANGE = (1e-9, 3.0)
DEFAULT_BRENT_TOL = 1e-10
DEFAULT_BRENT_MAXIT = 30
DEFAULT_INNER_TOL = 1e-10
DEFAULT_INNER_MAXIT = 25


@dataclass
class BrentResult:
    x: float
    fx: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def brent_minimize(fun, a: float, b: float, *, tol: float = DEFAULT_BRENT_TOL,
                   maxit: int = DEFAULT_BRENT_MAXIT) -> BrentResult:
    """Scalar minimization on [a, b] without derivatives."""
    if not b > a:
        raise ValueError("need a nondegenerate bracket a < b")
    x = w = v = a + GOLDEN * (b - a)
    fx = fw = fv = fun(x)
    d = e = 0.0
    history = [(x, fx)]
    for it in range(1, maxit + 1):
        m = 0.5 * (a + b)
        t = tol * abs(x) + tol
        if abs(x - m) <= 2.0 * t - 0.5 * (b - a):
            return BrentResult(x, fx, it - 1, True, history)
        use_golden = True
        if abs(e) > t:
            # fit a parabola through (v, fv), (w, fw), (x, fx)
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0:
                p = -p
            q = abs(q)
            e_old, e = e, d
            if abs(p) < abs(0.5 * q * e_old) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if u - a < 2.0 * t or b - u < 2.0 * t:
                    d = t if x < m else -t
                use_golden = False
        if use_golden:
            e = (b if x < m else a) - x
            d = GOLDEN * e
        u = x + (d if abs(d) >= t else (t if d > 0 else -t))
        fu = fun(u)
        history.append((u, fu))
        # a minimum-size step with no measurable decrease means the
        # iterate already sits at the numerical minimum
        if abs(u - x) <= 2.0 * t and abs(fu - fx) <= 4.0 * np.finfo(float).eps * max(
                abs(fx), 1.0):
            if fu < fx:
                x, fx = u, fu
            return BrentResult(x, fx, it, True, history)
        if fu <= fx:
            if u < x:
                b = x
            else:
                a = x
            v, fv, w, fw, x, fx = w, fw, x, fx, u, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, fv, w, fw = w, fw, u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return BrentResult(x, fx, maxit, False, history)


# ---------------------------------------------------------------------------
# Training data and the reduced objective
# ---------------------------------------------------------------------------


@dataclass
class TrainingPair:
    clean: GrayImage
    noisy: GrayImage


@dataclass
class TrainingSet:
    """Clean/noisy image pairs plus the kernel and solver settings."""

    pairs: list
    patch_size: int = 7
    sigma: float = 40.0
    mu: float = 0.01
    kernel_mode: str = "exact"
    inner_tol: float = DEFAULT_INNER_TOL
    inner_maxit: int = DEFAULT_INNER_MAXIT

    @classmethod
    def from_clean_images(cls, images, noise: NoiseSpec, **kwargs):
        pairs = [
            TrainingPair(img, add_gaussian_noise(img, NoiseSpec(
                noise.sigma, noise.seed + i)))
            for i, img in enumerate(images)
        ]
        return cls(pairs, **kwargs)

    @classmethod
    def from_manifest(cls, path, **kwargs):
        """Load clean/noisy file pairs from a JSON manifest.

        The manifest maps "pairs" to a list of {"clean": ..., "noisy": ...}
        entries with paths relative to the manifest file; solver settings in
        the manifest are overridden by keyword arguments.
        """
        path = Path(path)
        spec = json.loads(path.read_text())
        pairs = []
        for entry in spec["pairs"]:
            clean = load_pgm(path.parent / entry["clean"])
            noisy = load_pgm(path.parent / entry["noisy"])
            pairs.append(TrainingPair(clean, noisy))
        settings = {
            k: spec[k]
            for k in ("patch_size", "sigma", "mu", "kernel_mode")
            if k in spec
        }
        settings.update(kwargs)
        return cls(pairs, **settings)


class ReducedObjective:
    """j(lambda): mean squared training error of the lower-level solve."""

    def __init__(self, training: TrainingSet):
        self.training = training
        self._problems = []
        for pair in training.pairs:
            feats, wins = feature_windows(pair.noisy, training.patch_size)
            op = AnovaOperator(feats, wins, training.sigma,
                               mode=training.kernel_mode)
            self._problems.append((pair, op))
        self.evaluations = 0

    def denoise_all(self, lam: float) -> list[np.ndarray]:
        out = []
        for pair, op in self._problems:
            system = ShiftedSystem(op, lam, self.training.mu)
            res = deflated_solve(system, pair.noisy.ravel(), prec="jacobi",
                                 tol=self.training.inner_tol,
                                 maxit=self.training.inner_maxit)
            out.append(res.x)
        return out

    def __call__(self, lam: float) -> float:
        self.evaluations += 1
        sols = self.denoise_all(lam)
        total = 0.0
        for (pair, _), u in zip(self._problems, sols):
            diff = pair.clean.ravel() - u
            total += float(diff @ diff)
        return total / len(self._problems)


# ---------------------------------------------------------------------------
# Training and validation drivers
# ---------------------------------------------------------------------------


@dataclass
class TrainingReport:
    lambda_opt: float
    objective_opt: float
    brent_iterations: int
    brent_converged: bool
    objective_at_bounds: tuple
    ssim_noisy: list
    ssim_denoised: list
    history: list

    def mean_ssim_noisy(self) -> float:
        return float(np.mean(self.ssim_noisy))

    def mean_ssim_denoised(self) -> float:
        return float(np.mean(self.ssim_denoised))

    def to_json(self, path) -> None:
        payload = {
            "lambda_opt": self.lambda_opt,
            "objective_opt": self.objective_opt,
            "brent_iterations": self.brent_iterations,
            "brent_converged": self.brent_converged,
            "objective_at_bounds": list(self.objective_at_bounds),
            "ssim_noisy": self.ssim_noisy,
            "ssim_denoised": self.ssim_denoised,
            "mean_ssim_noisy": self.mean_ssim_noisy(),
            "mean_ssim_denoised": self.mean_ssim_denoised(),
            "history": [[x, fx] for x, fx in self.history],
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")

    def ssim_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["image_index", "ssim_noisy", "ssim_denoised"])
            for i, (sn, sd) in enumerate(zip(self.ssim_noisy,
                                             self.ssim_denoised)):
                writer.writerow([i, f"{sn:.6f}", f"{sd:.6f}"])


def _ssim_lists(problems, solutions):
    noisy_scores, denoised_scores = [], []
    for (pair, _), u in zip(problems, solutions):
        shape = pair.clean.shape
        noisy_scores.append(ssim(pair.clean, pair.noisy))
        denoised_scores.append(
            ssim(pair.clean, GrayImage(u.reshape(shape), pair.clean.maxval))
        )
    return noisy_scores, denoised_scores


def train(training: TrainingSet, *,
          lambda_range=DEFAULT_LAMBDA_RANGE,
          tol: float = DEFAULT_BRENT_TOL,
          maxit: int = DEFAULT_BRENT_MAXIT) -> TrainingReport:
    """Learn the fidelity weight on the training pairs."""
    objective = ReducedObjective(training)
    lo, hi = lambda_range
    res = brent_minimize(objective, lo, hi, tol=tol, maxit=maxit)
    j_lo, j_hi = objective(lo), objective(hi)
    sols = objective.denoise_all(res.x)
    sn, sd = _ssim_lists(objective._problems, sols)
    return TrainingReport(res.x, res.fx, res.iterations, res.converged,
                          (j_lo, j_hi), sn, sd, res.history)


def validate(training: TrainingSet, lambda_opt: float) -> TrainingReport:
    """Apply a learned fidelity weight to held-out pairs."""
    objective = ReducedObjective(training)
    fx = objective(lambda_opt)
    sols = objective.denoise_all(lambda_opt)
    sn, sd = _ssim_lists(objective._problems, sols)
    return TrainingReport(lambda_opt, fx, 0, True, (np.nan, np.nan),
                          sn, sd, [])
