"""Matrix-free ANOVA Gaussian kernel operator.

The kernel averages Gaussian subkernels over low-dimensional feature
windows,

    gamma_ij = (1/L) sum_l exp(-||f_i[w_l] - f_j[w_l]||^2 / sigma^2),

with a zero diagonal.  The fast mode evaluates each subkernel with the
NFFT fast Gauss transform and removes the diagonal as gamma_l v = G_l v - v;
the exact mode assembles the dense matrix once and reuses it, refusing to do
so above a configurable node limit.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import DenseLimitError, DimensionMismatchError, WindowSizeError
from .transform import FastsumPlan, gauss_transform_fast

DEFAULT_DENSE_LIMIT = 5000


class AnovaOperator:
    """Apply the ANOVA kernel matrix and its degree vectors matrix-free."""

    def __init__(self, features, windows, sigma: float, *, mode: str = "fast",
                 dense_limit: int = DEFAULT_DENSE_LIMIT):
        f = np.ascontiguousarray(features, dtype=np.float64)
        if f.ndim != 2:
            raise DimensionMismatchError("features must be a 2-d array")
        if f.shape[0] == 0:
            raise DimensionMismatchError("at least one node is required")
        if sigma <= 0:
            raise ValueError("kernel width sigma must be positive")
        if mode not in ("fast", "exact"):
            raise ValueError(f"unknown mode {mode!r}")
        wins = [np.asarray(w, dtype=np.intp).ravel() for w in windows]
        if not wins:
            raise ValueError("at least one feature window is required")
        for w in wins:
            if w.size == 0 or w.size > 3:
                raise WindowSizeError(
                    "windows must have one to three feature dimensions"
                )
            if w.min() < 0 or w.max() >= f.shape[1]:
                raise DimensionMismatchError("window index out of range")
        self.features = f
        self.windows = wins
        self.sigma = float(sigma)
        self.mode = mode
        self.dense_limit = int(dense_limit)
        self._plans = None        # fast-mode plans at 1/sigma^2
        self._plans_sq = None     # fast-mode plans at 2/sigma^2
        self._dense = None        # exact-mode dense matrix
        self._dense_sq = None
        self._degree = None

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def n_windows(self) -> int:
        return len(self.windows)

    # -- fast path ---------------------------------------------------------

    def _build_plans(self, sigbar: float):
        plans = []
        for w in self.windows:
            pts = np.ascontiguousarray(self.features[:, w])
            plan = FastsumPlan.build(pts, sigbar)
            tables = plan.tables_for(pts)
            plans.append((pts, plan, tables))
        return plans

    def _fast_apply(self, v: np.ndarray, squared: bool) -> np.ndarray:
        sigbar = (2.0 if squared else 1.0) / (self.sigma * self.sigma)
        cache = "_plans_sq" if squared else "_plans"
        plans = getattr(self, cache)
        if plans is None:
            plans = self._build_plans(sigbar)
            setattr(self, cache, plans)
        out = np.zeros_like(v)
        for pts, plan, tables in plans:
            out += gauss_transform_fast(pts, pts, v, plan,
                                        source_tables=tables,
                                        target_tables=tables)
        # each full Gauss sum includes the unit diagonal once
        out -= self.n_windows * v
        return out / self.n_windows

    # -- exact path --------------------------------------------------------

    def _dense_sum(self, squared: bool) -> np.ndarray:
        cache = "_dense_sq" if squared else "_dense"
        mat = getattr(self, cache)
        if mat is not None:
            return mat
        if self.n > self.dense_limit:
            raise DenseLimitError(
                f"dense assembly of {self.n} nodes exceeds the limit "
                f"{self.dense_limit}"
            )
        inv_s2 = (2.0 if squared else 1.0) / (self.sigma * self.sigma)
        mat = np.zeros((self.n, self.n))
        for w in self.windows:
            pts = np.ascontiguousarray(self.features[:, w])
            _kernels.add_gauss_gram(pts, inv_s2, mat)
        mat /= self.n_windows
        setattr(self, cache, mat)
        return mat

    # -- public API --------------------------------------------------------

    def apply(self, v) -> np.ndarray:
        """Matrix-vector product gamma v."""
        x = np.asarray(v, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionMismatchError(
                f"vector length {x.shape} does not match {self.n} nodes"
            )
        if self.mode == "exact":
            return self._dense_sum(False) @ x
        return self._fast_apply(x, False)

    def apply_squared(self, v) -> np.ndarray:
        """Matrix-vector product with the entrywise-squared subkernel sum.

        This is sum_l (gamma_l o gamma_l) v / L, obtained by doubling the
        Gaussian exponent, and drives the diagonal preconditioner estimate.
        """
        x = np.asarray(v, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionMismatchError("vector length mismatch")
        if self.mode == "exact":
            return self._dense_sum(True) @ x
        return self._fast_apply(x, True)

    def degree(self) -> np.ndarray:
        """eta = gamma 1, cached."""
        if self._degree is None:
            self._degree = self.apply(np.ones(self.n))
        return self._degree

    def degree_squared(self) -> np.ndarray:
        """Row sums of the entrywise-squared subkernels, summed over windows.

        Returns sum_l (gamma_l o gamma_l) 1 without the 1/L average, the
        quantity the row-l2 preconditioner estimate scales by (mu/L)^2.
        """
        return self.apply_squared(np.ones(self.n)) * self.n_windows

    def assemble_dense(self) -> np.ndarray:
        """Dense kernel matrix (zero diagonal); respects the node limit."""
        return self._dense_sum(False).copy()

    def __matmul__(self, v):
        return self.apply(v)
