"""Patch features and the mutual-information grouping of patch offsets.

Each pixel yields a feature row: the zero-padded square neighborhood read in
raster order.  Feature coordinates are ranked by the mutual information
between each coordinate and the patch center, then split into consecutive
groups of at most three, because the fast transform works in up to three
dimensions per group.
"""

from __future__ import annotations

import numpy as np

from .errors import WindowSizeError

MI_BINS = 16
WINDOW_DIMS = 3


def extract_patches(image, patch_size: int) -> np.ndarray:
    """Feature matrix (n_pixels, patch_size**2), zero padding at borders."""
    pix = np.asarray(getattr(image, "pixels", image), dtype=np.float64)
    if pix.ndim != 2:
        raise ValueError("expected a 2-d image")
    if patch_size < 1 or patch_size % 2 == 0:
        raise ValueError("patch size must be odd and positive")
    half = patch_size // 2
    padded = np.pad(pix, half, mode="constant")
    h, w = pix.shape
    feats = np.empty((h * w, patch_size * patch_size), dtype=np.float64)
    col = 0
    for dr in range(patch_size):
        for dc in range(patch_size):
            feats[:, col] = padded[dr:dr + h, dc:dc + w].ravel()
            col += 1
    return feats


def center_column(patch_size: int) -> int:
    """Raster-order index of the patch center."""
    return (patch_size * patch_size) // 2


def mutual_information_scores(features: np.ndarray,
                              center: int | None = None) -> np.ndarray:
    """Plug-in mutual information (nats) of each column with the center.

    Joint distributions use a 16 x 16 equal-width histogram over each
    column's own range.  ``center`` defaults to the middle column, which
    is the patch center for raster-order square patches.
    """
    f = np.asarray(features, dtype=np.float64)
    n, d = f.shape
    if center is None:
        center = (d - 1) // 2
    if not 0 <= center < d:
        raise ValueError("center column out of range")

    def digitize(col):
        lo, hi = col.min(), col.max()
        if hi <= lo:
            return np.zeros(n, dtype=np.intp)
        idx = ((col - lo) * (MI_BINS / (hi - lo))).astype(np.intp)
        return np.minimum(idx, MI_BINS - 1)

    c_bins = digitize(f[:, center])
    scores = np.empty(d, dtype=np.float64)
    for j in range(d):
        j_bins = digitize(f[:, j])
        joint = np.zeros((MI_BINS, MI_BINS))
        np.add.at(joint, (j_bins, c_bins), 1.0)
        joint /= n
        pj = joint.sum(axis=1)
        pc = joint.sum(axis=0)
        mask = joint > 0
        outer = np.outer(pj, pc)
        scores[j] = float(np.sum(joint[mask] * np.log(joint[mask] / outer[mask])))
    return scores


def split_windows(scores: np.ndarray) -> list[np.ndarray]:
    """Group feature indices into windows of at most three dimensions.

    Indices are sorted by descending score, ties broken by ascending index,
    then cut into consecutive triples.
    """
    s = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(s.size), -s))
    return [order[i:i + WINDOW_DIMS] for i in range(0, s.size, WINDOW_DIMS)]


def feature_windows(image, patch_size: int):
    """Convenience pipeline: patches, MI ranking, window split.

    Returns the feature matrix and the list of per-window column index
    arrays.
    """
    feats = extract_patches(image, patch_size)
    scores = mutual_information_scores(feats, center_column(patch_size))
    windows = split_windows(scores)
    for w in windows:
        if w.size > WINDOW_DIMS:
            raise WindowSizeError("window wider than the 3-d transform limit")
    return feats, windows
