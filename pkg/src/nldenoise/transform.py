"""Nonequispaced Fourier transforms and the fast Gauss transform.

The exact transforms (``ndft``, ``ndft_adjoint``, ``gauss_transform_direct``)
serve as oracles; the fast variants approximate them with controllable
accuracy.  Frequencies live on the centered multi-index set
``{-M/2, ..., M/2 - 1}`` per dimension and nodes on the torus
``[-1/2, 1/2)^d``, with the sign convention

    f(x) = sum_k  fhat_k  exp(-2 pi i  k . x).

The fast path uses a Kaiser-Bessel window on a 2x-oversampled grid; the
periodized-Gaussian Fourier coefficients for the fast summation are obtained
by sampling the kernel on the expansion grid and taking an FFT.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import i0

from . import _kernels
from .errors import DimensionMismatchError, ScalingOverflowError

DEFAULT_CUTOFF = 5
DEFAULT_OVERSAMPLING = 2.0
DEFAULT_RMAX = 0.25 - 1.0 / 32.0
DEFAULT_TRUNCATION_EPS = 1e-8
MIN_EXPANSION = 16
MAX_EXPANSION = 192


def _as_nodes(nodes) -> np.ndarray:
    x = np.asarray(getattr(nodes, "nodes", nodes), dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] > 3:
        raise DimensionMismatchError(
            f"nodes must be (N, d) with d <= 3, got shape {x.shape}"
        )
    return x


@dataclass(frozen=True)
class NodeSet:
    """Nodes on the torus [-1/2, 1/2)^d, d <= 3."""

    nodes: np.ndarray

    def __post_init__(self):
        x = _as_nodes(self.nodes)
        if x.size and (x.min() < -0.5 or x.max() >= 0.5):
            raise ValueError("node coordinates must lie in [-1/2, 1/2)")
        object.__setattr__(self, "nodes", x)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def __len__(self) -> int:
        return self.nodes.shape[0]


def _freqs(m: int) -> np.ndarray:
    return np.arange(-(m // 2), m - m // 2)


# ---------------------------------------------------------------------------
# Exact transforms (oracles)
# ---------------------------------------------------------------------------


def ndft(coeffs: np.ndarray, nodes) -> np.ndarray:
    """Evaluate the trigonometric polynomial exactly at every node."""
    x = _as_nodes(nodes)
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.ndim != x.shape[1]:
        raise DimensionMismatchError(
            f"coefficient array has {c.ndim} axes for {x.shape[1]}-d nodes"
        )
    out = c
    for s, m in enumerate(c.shape):
        phase = np.exp(-2j * np.pi * np.outer(x[:, s], _freqs(m)))
        if s == 0:
            out = np.einsum("nk,k...->n...", phase, out)
        else:
            out = np.einsum("nk,nk...->n...", phase, out)
    return out.reshape(x.shape[0])


def ndft_adjoint(values: np.ndarray, nodes, bandwidth) -> np.ndarray:
    """Exact adjoint sum: coefficients over the centered index set."""
    x = _as_nodes(nodes)
    shape = tuple(np.atleast_1d(bandwidth).astype(int))
    if len(shape) == 1 and x.shape[1] > 1:
        shape = shape * x.shape[1]
    out = np.asarray(values, dtype=np.complex128)
    for s, m in enumerate(shape):
        phase = np.exp(2j * np.pi * np.outer(x[:, s], _freqs(m)))
        out = np.einsum("n...,nk->n...k", out, phase)
    return out.sum(axis=0)


# ---------------------------------------------------------------------------
# Kaiser-Bessel window NFFT
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NfftPlan:
    """Plan for a d-variate NFFT: bandwidths, oversampling, window cutoff."""

    bandwidth: tuple
    oversampling: float = DEFAULT_OVERSAMPLING
    cutoff: int = DEFAULT_CUTOFF
    nos: tuple = field(init=False)
    _shape_b: tuple = field(init=False)

    def __post_init__(self):
        bw = tuple(int(m) for m in np.atleast_1d(self.bandwidth))
        if any(m <= 0 or m % 2 for m in bw):
            raise ValueError("bandwidths must be even positive integers")
        if self.oversampling < 1.25:
            raise ValueError("oversampling factor must be >= 1.25")
        if self.cutoff < 1:
            raise ValueError("window cutoff must be >= 1")
        object.__setattr__(self, "bandwidth", bw)
        nos = tuple(2 * int(np.ceil(self.oversampling * m / 2)) for m in bw)
        object.__setattr__(self, "nos", nos)
        shape_b = tuple(
            np.pi * (2.0 - m / n) for m, n in zip(bw, nos)
        )
        object.__setattr__(self, "_shape_b", shape_b)

    @property
    def dim(self) -> int:
        return len(self.bandwidth)

    def window_factors(self, s: int) -> np.ndarray:
        """I0-form Fourier factors of the window along dimension s."""
        m, n, b = self.bandwidth[s], self.nos[s], self._shape_b[s]
        k = _freqs(m)
        arg = b * b - (2.0 * np.pi * k / n) ** 2
        return i0(self.cutoff * np.sqrt(arg))

    def node_tables(self, nodes: np.ndarray):
        """Stencil base indices and window weights for a node batch."""
        x = _as_nodes(nodes)
        if x.shape[1] != self.dim:
            raise DimensionMismatchError("node dimension does not match plan")
        mcut = self.cutoff
        w = 2 * mcut + 2
        n_nodes = x.shape[0]
        base = np.empty((n_nodes, self.dim), dtype=np.int64)
        weights = np.zeros((n_nodes, self.dim, w), dtype=np.float64)
        for s in range(self.dim):
            n = self.nos[s]
            b = self._shape_b[s]
            xs = x[:, s] * n
            l0 = np.floor(xs).astype(np.int64) - mcut
            base[:, s] = l0
            u = xs[:, None] - (l0[:, None] + np.arange(w)[None, :])
            t = mcut * mcut - u * u
            pos = t > 0
            root = np.sqrt(np.where(pos, t, 1.0))
            vals = np.where(pos, np.sinh(b * root) / (np.pi * root), 0.0)
            vals[np.abs(t) <= 1e-14] = b / np.pi
            weights[:, s, :] = vals
        return base, weights


def _embed(coeffs: np.ndarray, nos: tuple) -> np.ndarray:
    grid = np.zeros(nos, dtype=np.complex128)
    idx = [
        (np.arange(-(m // 2), m - m // 2) % n)
        for m, n in zip(coeffs.shape, nos)
    ]
    grid[np.ix_(*idx)] = coeffs
    return grid


def _extract(grid: np.ndarray, bandwidth: tuple) -> np.ndarray:
    idx = [
        (np.arange(-(m // 2), m - m // 2) % n)
        for m, n in zip(bandwidth, grid.shape)
    ]
    return grid[np.ix_(*idx)]


def _deconvolve(coeffs: np.ndarray, plan: NfftPlan) -> np.ndarray:
    out = np.array(coeffs, dtype=np.complex128)
    for s in range(plan.dim):
        shape = [1] * plan.dim
        shape[s] = -1
        out /= plan.window_factors(s).reshape(shape)
    return out


def nfft(coeffs, nodes, plan: NfftPlan, tables=None) -> np.ndarray:
    """Fast approximate evaluation of the trigonometric polynomial."""
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.shape != plan.bandwidth:
        raise DimensionMismatchError(
            f"coefficients shape {c.shape} != plan bandwidth {plan.bandwidth}"
        )
    x = _as_nodes(nodes)
    base, weights = plan.node_tables(x) if tables is None else tables
    grid = np.fft.fftn(_embed(_deconvolve(c, plan), plan.nos)).ravel()
    out = np.empty(x.shape[0], dtype=np.complex128)
    _kernels.gather(grid, base, weights, np.asarray(plan.nos, np.int64), out)
    return out


def nfft_adjoint(values, nodes, plan: NfftPlan, tables=None) -> np.ndarray:
    """Fast approximate adjoint transform."""
    x = _as_nodes(nodes)
    v = np.asarray(values, dtype=np.complex128)
    base, weights = plan.node_tables(x) if tables is None else tables
    grid = np.zeros(int(np.prod(plan.nos)), dtype=np.complex128)
    _kernels.spread(v, base, weights, np.asarray(plan.nos, np.int64), grid)
    ghat = np.fft.ifftn(grid.reshape(plan.nos)) * float(np.prod(plan.nos))
    return _deconvolve(_extract(ghat, plan.bandwidth), plan)


# ---------------------------------------------------------------------------
# Gauss transform
# ---------------------------------------------------------------------------


def gauss_transform_direct(sources, targets, alpha, sigbar: float):
    """Exact O(Nx * Ny) discrete Gauss transform."""
    if sigbar <= 0:
        raise ValueError("shape parameter must be positive")
    y = np.ascontiguousarray(np.atleast_2d(np.asarray(sources, np.float64).T).T)
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(targets, np.float64).T).T)
    if y.ndim == 1:
        y = y[:, None]
    if x.ndim == 1:
        x = x[:, None]
    a = np.asarray(alpha, dtype=np.float64)
    out = np.empty(x.shape[0], dtype=np.float64)
    _kernels.gauss_direct_sum(x, y, a, float(sigbar), out)
    return out


def _points_2d(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    return p


def expansion_degree(sigbar_scaled: float, eps: float = DEFAULT_TRUNCATION_EPS) -> int:
    """Even expansion degree keeping the periodized-Gaussian tail below eps."""
    k = int(np.ceil(np.sqrt(max(sigbar_scaled, 1.0) * np.log(1.0 / eps)) / np.pi))
    n = 2 * max(MIN_EXPANSION // 2, k + 1)
    return min(n, MAX_EXPANSION)


@dataclass
class FastsumPlan:
    """Fast Gauss-transform plan: torus scaling, kernel coefficients, NFFT."""

    sigbar: float
    center: np.ndarray
    scale: float
    rmax: float
    nfft_plan: NfftPlan
    kernel_coeffs: np.ndarray

    @classmethod
    def build(
        cls,
        points,
        sigbar: float,
        *,
        n_expansion: int | None = None,
        cutoff: int = DEFAULT_CUTOFF,
        oversampling: float = DEFAULT_OVERSAMPLING,
        rmax: float = DEFAULT_RMAX,
        truncation_eps: float = DEFAULT_TRUNCATION_EPS,
    ) -> "FastsumPlan":
        if sigbar <= 0:
            raise ValueError("shape parameter must be positive")
        if not (0 < rmax <= 0.25):
            raise ValueError("rmax must lie in (0, 1/4]")
        p = _points_2d(points)
        if p.shape[0] == 0:
            raise ValueError("cannot build a plan from an empty point set")
        d = p.shape[1]
        lo, hi = p.min(axis=0), p.max(axis=0)
        center = 0.5 * (lo + hi)
        radius = float(np.sqrt(((p - center) ** 2).sum(axis=1).max()))
        scale = rmax / max(radius, 1e-30)
        sig_scaled = sigbar / (scale * scale)
        if n_expansion is None:
            n_expansion = expansion_degree(sig_scaled, truncation_eps)
        if n_expansion % 2:
            raise ValueError("expansion degree must be even")
        plan = NfftPlan((n_expansion,) * d, oversampling, cutoff)
        grid_1d = _freqs(n_expansion) / n_expansion
        mesh = np.meshgrid(*([grid_1d] * d), indexing="ij")
        r2 = sum(g * g for g in mesh)
        kernel = np.exp(-sig_scaled * r2)
        raw = np.fft.ifftn(_embed(kernel.astype(np.complex128), (n_expansion,) * d))
        coeffs = np.real(_extract(raw, (n_expansion,) * d))
        return cls(float(sigbar), center, float(scale), float(rmax), plan, coeffs)

    def map_to_torus(self, points) -> np.ndarray:
        p = _points_2d(points)
        q = (p - self.center) * self.scale
        if q.size and (np.abs(q).max() >= 0.5):
            raise ScalingOverflowError(
                "scaled nodes leave the torus [-1/2, 1/2)^d"
            )
        return q

    def tables_for(self, points):
        return self.nfft_plan.node_tables(self.map_to_torus(points))


def gauss_transform_fast(
    sources, targets, alpha, plan: FastsumPlan,
    source_tables=None, target_tables=None,
) -> np.ndarray:
    """NFFT-based fast summation approximating gauss_transform_direct."""
    ys = plan.map_to_torus(sources)
    xs = plan.map_to_torus(targets)
    a = np.asarray(alpha, dtype=np.float64)
    ahat = nfft_adjoint(a, ys, plan.nfft_plan, tables=source_tables)
    return np.real(nfft(ahat * plan.kernel_coeffs, xs, plan.nfft_plan,
                        tables=target_tables))
