"""Hot numeric loops with a numba fast path and a pure-numpy fallback.

The backend is chosen at import time: set ``NLDENOISE_NO_NUMBA=1`` to force
the numpy implementations (useful for debugging and for the backend
benchmark under ``benchmarks/``).
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("NLDENOISE_NO_NUMBA", "") not in ("", "0")

try:
    if _FORCE_NUMPY:
        raise ImportError
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):  # no-op decorator
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


def backend_name() -> str:
    return "numba" if _HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# NFFT spreading / gathering
#
# base[j, s] is the lowest grid index of node j's stencil along dimension s,
# weights[j, s, :] the window values on the stencil (width W = 2m + 2),
# and the oversampled grid is flattened C-order with shape nos[0..d-1].
# ---------------------------------------------------------------------------


@njit(cache=True)
def _spread_nb(values, base, weights, nos, grid):
    n, d, w = weights.shape
    if d == 1:
        n0 = nos[0]
        for j in range(n):
            v = values[j]
            b0 = base[j, 0]
            for i0 in range(w):
                grid[(b0 + i0) % n0] += v * weights[j, 0, i0]
    elif d == 2:
        n0, n1 = nos[0], nos[1]
        for j in range(n):
            v = values[j]
            b0, b1 = base[j, 0], base[j, 1]
            for i0 in range(w):
                w0 = weights[j, 0, i0]
                if w0 == 0.0:
                    continue
                row = ((b0 + i0) % n0) * n1
                vv = v * w0
                for i1 in range(w):
                    grid[row + (b1 + i1) % n1] += vv * weights[j, 1, i1]
    else:
        n0, n1, n2 = nos[0], nos[1], nos[2]
        for j in range(n):
            v = values[j]
            b0, b1, b2 = base[j, 0], base[j, 1], base[j, 2]
            for i0 in range(w):
                w0 = weights[j, 0, i0]
                if w0 == 0.0:
                    continue
                p0 = ((b0 + i0) % n0) * n1
                for i1 in range(w):
                    w01 = w0 * weights[j, 1, i1]
                    if w01 == 0.0:
                        continue
                    row = (p0 + (b1 + i1) % n1) * n2
                    vv = v * w01
                    for i2 in range(w):
                        grid[row + (b2 + i2) % n2] += vv * weights[j, 2, i2]


@njit(cache=True)
def _gather_nb(grid, base, weights, nos, out):
    n, d, w = weights.shape
    if d == 1:
        n0 = nos[0]
        for j in range(n):
            acc = 0.0 + 0.0j
            b0 = base[j, 0]
            for i0 in range(w):
                acc += grid[(b0 + i0) % n0] * weights[j, 0, i0]
            out[j] = acc
    elif d == 2:
        n0, n1 = nos[0], nos[1]
        for j in range(n):
            acc = 0.0 + 0.0j
            b0, b1 = base[j, 0], base[j, 1]
            for i0 in range(w):
                w0 = weights[j, 0, i0]
                if w0 == 0.0:
                    continue
                row = ((b0 + i0) % n0) * n1
                inner = 0.0 + 0.0j
                for i1 in range(w):
                    inner += grid[row + (b1 + i1) % n1] * weights[j, 1, i1]
                acc += w0 * inner
            out[j] = acc
    else:
        n0, n1, n2 = nos[0], nos[1], nos[2]
        for j in range(n):
            acc = 0.0 + 0.0j
            b0, b1, b2 = base[j, 0], base[j, 1], base[j, 2]
            for i0 in range(w):
                w0 = weights[j, 0, i0]
                if w0 == 0.0:
                    continue
                p0 = ((b0 + i0) % n0) * n1
                for i1 in range(w):
                    w01 = w0 * weights[j, 1, i1]
                    if w01 == 0.0:
                        continue
                    row = (p0 + (b1 + i1) % n1) * n2
                    inner = 0.0 + 0.0j
                    for i2 in range(w):
                        inner += grid[row + (b2 + i2) % n2] * weights[j, 2, i2]
                    acc += w01 * inner
            out[j] = acc


def _offset_grids(w, d):
    ranges = [np.arange(w)] * d
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)  # (w**d, d)


def _spread_np(values, base, weights, nos, grid):
    n, d, w = weights.shape
    strides = np.ones(d, dtype=np.int64)
    for s in range(d - 2, -1, -1):
        strides[s] = strides[s + 1] * nos[s + 1]
    for off in _offset_grids(w, d):
        wprod = weights[:, 0, off[0]].copy()
        idx = ((base[:, 0] + off[0]) % nos[0]) * strides[0]
        for s in range(1, d):
            wprod *= weights[:, s, off[s]]
            idx += ((base[:, s] + off[s]) % nos[s]) * strides[s]
        np.add.at(grid, idx, values * wprod)


def _gather_np(grid, base, weights, nos, out):
    n, d, w = weights.shape
    strides = np.ones(d, dtype=np.int64)
    for s in range(d - 2, -1, -1):
        strides[s] = strides[s + 1] * nos[s + 1]
    out[:] = 0
    for off in _offset_grids(w, d):
        wprod = weights[:, 0, off[0]].copy()
        idx = ((base[:, 0] + off[0]) % nos[0]) * strides[0]
        for s in range(1, d):
            wprod *= weights[:, s, off[s]]
            idx += ((base[:, s] + off[s]) % nos[s]) * strides[s]
        out += grid[idx] * wprod


# ---------------------------------------------------------------------------
# Direct Gauss transform and dense Gaussian Gram accumulation
# ---------------------------------------------------------------------------


@njit(cache=True)
def _gauss_direct_nb(targets, sources, alpha, sigbar, out):
    nx, d = targets.shape
    ny = sources.shape[0]
    for i in range(nx):
        acc = 0.0
        for j in range(ny):
            r2 = 0.0
            for s in range(d):
                diff = targets[i, s] - sources[j, s]
                r2 += diff * diff
            acc += alpha[j] * np.exp(-sigbar * r2)
        out[i] = acc


def _gauss_direct_np(targets, sources, alpha, sigbar, out):
    nx = targets.shape[0]
    block = max(1, int(4e6) // max(1, sources.shape[0]))
    for lo in range(0, nx, block):
        hi = min(lo + block, nx)
        d2 = np.sum(
            (targets[lo:hi, None, :] - sources[None, :, :]) ** 2, axis=2
        )
        out[lo:hi] = np.exp(-sigbar * d2) @ alpha


@njit(cache=True)
def _add_gauss_gram_nb(feat, inv_s2, out):
    n, d = feat.shape
    for i in range(n):
        for j in range(i + 1, n):
            r2 = 0.0
            for s in range(d):
                diff = feat[i, s] - feat[j, s]
                r2 += diff * diff
            g = np.exp(-inv_s2 * r2)
            out[i, j] += g
            out[j, i] += g


def _add_gauss_gram_np(feat, inv_s2, out):
    n = feat.shape[0]
    block = max(1, int(4e6) // max(1, n))
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        d2 = np.sum((feat[lo:hi, None, :] - feat[None, :, :]) ** 2, axis=2)
        g = np.exp(-inv_s2 * d2)
        out[lo:hi] += g
    out[np.diag_indices(n)] -= 1.0  # remove the exp(0) diagonal added above


def _add_gauss_gram(feat, inv_s2, out):
    if _HAVE_NUMBA:
        _add_gauss_gram_nb(feat, inv_s2, out)
    else:
        _add_gauss_gram_np(feat, inv_s2, out)


def spread(values, base, weights, nos, grid):
    """Accumulate node values onto the oversampled grid (adjoint step)."""
    if _HAVE_NUMBA:
        _spread_nb(values, base, weights, nos, grid)
    else:
        _spread_np(values, base, weights, nos, grid)


def gather(grid, base, weights, nos, out):
    """Evaluate the windowed grid sum at every node (forward step)."""
    if _HAVE_NUMBA:
        _gather_nb(grid, base, weights, nos, out)
    else:
        _gather_np(grid, base, weights, nos, out)


def gauss_direct_sum(targets, sources, alpha, sigbar, out):
    if _HAVE_NUMBA:
        _gauss_direct_nb(targets, sources, alpha, sigbar, out)
    else:
        _gauss_direct_np(targets, sources, alpha, sigbar, out)


add_gauss_gram = _add_gauss_gram
