"""Shifted graph-Laplacian system, change of basis, and deflated PCG.

The denoising system is

    A = lambda I + mu (diag(eta) - Gamma) = lambda I + mu L,

with Gamma the ANOVA kernel and eta = Gamma 1.  Since L 1 = 0, A maps the
constant vector to lambda 1; the deflated solver changes basis so that this
known eigenpair splits off exactly and conjugate gradients runs only on the
orthogonal complement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, SolverBreakdownError
from .kernel import AnovaOperator


# ---------------------------------------------------------------------------
# System operator
# ---------------------------------------------------------------------------


class ShiftedSystem:
    """A = lambda I + mu (diag(eta) - Gamma), applied matrix-free."""

    def __init__(self, kernel: AnovaOperator, lam: float, mu: float):
        if lam <= 0 or mu <= 0:
            raise ValueError("shift lambda and weight mu must be positive")
        self.kernel = kernel
        self.lam = float(lam)
        self.mu = float(mu)
        self.eta = kernel.degree()

    @property
    def n(self) -> int:
        return self.kernel.n

    def laplacian_apply(self, v) -> np.ndarray:
        """L v = diag(eta) v - Gamma v."""
        x = np.asarray(v, dtype=np.float64)
        return self.eta * x - self.kernel.apply(x)

    def apply(self, v) -> np.ndarray:
        x = np.asarray(v, dtype=np.float64)
        return self.lam * x + self.mu * self.laplacian_apply(x)

    def __matmul__(self, v):
        return self.apply(v)

    # -- diagonal preconditioners -----------------------------------------

    def jacobi_diagonal(self) -> np.ndarray:
        """diag(A) = lambda + mu eta (the kernel diagonal is zero)."""
        return self.lam + self.mu * self.eta

    def l2_diagonal(self, exact: bool = False) -> np.ndarray:
        """Row-wise l2 estimate of A's rows as a diagonal preconditioner.

        The default uses the entrywise-squared subkernel sum, available
        matrix-free; ``exact=True`` squares the assembled dense kernel
        average instead (dense mode only).
        """
        pa = self.jacobi_diagonal()
        if exact:
            g = self.kernel.assemble_dense()
            row_sq = (g * g).sum(axis=1)
        else:
            ell = self.kernel.n_windows
            row_sq = self.kernel.degree_squared() / (ell * ell)
        return np.sqrt(self.mu * self.mu * row_sq + pa * pa)


# ---------------------------------------------------------------------------
# Change of basis deflating a known eigenvector
# ---------------------------------------------------------------------------


def _check_vec(v, n=None):
    x = np.asarray(v, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError("expected a 1-d vector")
    if n is not None and x.size != n:
        raise DimensionMismatchError(f"length {x.size}, expected {n}")
    return x


def cob_q_apply(v, u) -> np.ndarray:
    """Non-orthogonal deflating basis: Q u = (<u, v>; u1 v_tail - v1 u_tail)."""
    v = _check_vec(v)
    u = _check_vec(u, v.size)
    out = np.empty_like(u)
    out[0] = v @ u
    out[1:] = u[0] * v[1:] - v[0] * u[1:]
    return out


def cob_q_inverse(v, u) -> np.ndarray:
    """Inverse of ``cob_q_apply`` for v with nonzero first entry."""
    v = _check_vec(v)
    u = _check_vec(u, v.size)
    if v[0] == 0:
        raise ValueError("Q inverse needs a nonzero first component of v")
    out = np.empty_like(u)
    out[0] = (u[0] * v[0] + v[1:] @ u[1:]) / (v @ v)
    out[1:] = (out[0] * v[1:] - u[1:]) / v[0]
    return out


def scs_up(x) -> np.ndarray:
    """Suffix-cumulative sum: out_i = x_1 + sum_{j>i} x_j, out_n = x_1."""
    x = _check_vec(x)
    out = np.empty_like(x)
    tail = np.cumsum(x[::-1])[::-1]  # tail_i = sum_{j >= i} x_j
    out[:-1] = x[0] + tail[1:]
    out[-1] = x[0]
    return out


def scs_down(x) -> np.ndarray:
    """Prefix-cumulative sum: out_1 = sum_j x_j, out_i = sum_{j<i} x_j."""
    x = _check_vec(x)
    out = np.empty_like(x)
    c = np.cumsum(x)
    out[0] = c[-1]
    out[1:] = c[:-1]
    return out


@dataclass(frozen=True)
class DeflatingBasis:
    """Orthogonal basis U with first column v/||v||, applied in O(n)."""

    v: np.ndarray
    _a: np.ndarray = field(init=False, repr=False)
    _b: np.ndarray = field(init=False, repr=False)
    _norm: float = field(init=False, repr=False)

    def __post_init__(self):
        v = _check_vec(self.v)
        if v.size < 2:
            raise DimensionMismatchError("basis needs at least two entries")
        prefix = np.sqrt(np.cumsum(v * v))
        if prefix[0] == 0.0:
            raise ValueError("leading entry of v must be nonzero")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "_a", prefix[:-1] / prefix[1:])
        object.__setattr__(self, "_b", 1.0 / (prefix[:-1] * prefix[1:]))
        object.__setattr__(self, "_norm", float(prefix[-1]))

    @property
    def n(self) -> int:
        return self.v.size

    def apply(self, x) -> np.ndarray:
        """U x."""
        x = _check_vec(x, self.n)
        y = np.empty_like(x)
        y[0] = x[0] / self._norm
        y[1:] = self._b * self.v[1:] * x[1:]
        out = self.v * scs_up(y)
        out[1:] -= self._a * x[1:]
        return out

    def apply_adjoint(self, x) -> np.ndarray:
        """U^T x."""
        x = _check_vec(x, self.n)
        s = scs_down(self.v * x)
        out = np.empty_like(x)
        out[0] = s[0] / self._norm
        out[1:] = self._b * self.v[1:] * s[1:] - self._a * x[1:]
        return out


# ---------------------------------------------------------------------------
# Preconditioned conjugate gradients
# ---------------------------------------------------------------------------


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    converged: bool
    relative_residual: float
    residual_history: list


def pcg(apply_a, b, x0=None, *, prec=None, tol: float = 1e-10,
        maxit: int = 100) -> SolveResult:
    """Conjugate gradients with optional diagonal-style preconditioner.

    ``prec`` is a callable applying the inverse preconditioner.  Convergence
    is declared on the true residual ||b - A x|| relative to
    max(||b||, ||r0||), recomputed explicitly when the recurrence residual
    first looks small; the max keeps a poor warm start from inflating the
    required reduction.
    """
    b = np.asarray(b, dtype=np.float64)
    if float(np.linalg.norm(b)) == 0.0 and x0 is None:
        return SolveResult(np.zeros_like(b), 0, True, 0.0, [0.0])
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - apply_a(x)
    bnorm = max(float(np.linalg.norm(b)), float(np.linalg.norm(r)))
    if bnorm == 0.0:
        return SolveResult(x, 0, True, 0.0, [0.0])
    history = [float(np.linalg.norm(r)) / bnorm]
    if maxit <= 0:
        return SolveResult(x, 0, False, history[0], history)
    z = prec(r) if prec is not None else r
    p = z.copy()
    rz = float(r @ z)
    it = 0
    while it < maxit:
        ap = apply_a(p)
        pap = float(p @ ap)
        if not np.isfinite(pap) or pap <= 0.0:
            raise SolverBreakdownError(
                f"indefinite or non-finite curvature at iteration {it}"
            )
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        it += 1
        rel = float(np.linalg.norm(r)) / bnorm
        history.append(rel)
        if rel <= tol:
            # confirm with the explicitly recomputed residual
            true_rel = float(np.linalg.norm(b - apply_a(x))) / bnorm
            history[-1] = true_rel
            if true_rel <= tol:
                return SolveResult(x, it, True, true_rel, history)
        z = prec(r) if prec is not None else r
        rz_new = float(r @ z)
        if not np.isfinite(rz_new):
            raise SolverBreakdownError("non-finite residual inner product")
        p = z + (rz_new / rz) * p
        rz = rz_new
    rel = float(np.linalg.norm(b - apply_a(x))) / bnorm
    return SolveResult(x, it, rel <= tol, rel, history)


# ---------------------------------------------------------------------------
# Deflated solve of A u = lambda f
# ---------------------------------------------------------------------------


def _projected_prec(basis: DeflatingBasis, diag_inv: np.ndarray):
    """Tail block of U^T P^{-1} U as a callable on the complement."""

    def apply(y):
        z = np.concatenate(([0.0], y))
        w = basis.apply_adjoint(diag_inv * basis.apply(z))
        return w[1:]

    return apply


def deflated_solve(system: ShiftedSystem, f, *, prec: str = "jacobi",
                   tol: float = 1e-10, maxit: int = 100,
                   warm_start: bool = False) -> SolveResult:
    """Solve A u = lambda f in the basis deflating the constant eigenpair.

    The first transformed coordinate is solved exactly (it carries the mean
    of f), and PCG runs on the remaining block with the projected diagonal
    preconditioner selected by ``prec`` in {"none", "jacobi", "l2"}.

    The tail starts from zero by default; for small lambda the transformed
    input is a poor guess whose residual dwarfs the right-hand side, and
    zero keeps the iteration count independent of the shift.
    """
    f = _check_vec(f, system.n)
    basis = DeflatingBasis(np.ones(system.n))
    g = basis.apply_adjoint(f)  # lambda cancels: (lam U^T f)/lam on coord 1
    x_first = g[0]

    def tail_apply(y):
        z = np.concatenate(([0.0], y))
        w = basis.apply_adjoint(system.apply(basis.apply(z)))
        return w[1:]

    if prec == "none":
        tail_prec = None
    elif prec == "jacobi":
        tail_prec = _projected_prec(basis, 1.0 / system.jacobi_diagonal())
    elif prec == "l2":
        tail_prec = _projected_prec(basis, 1.0 / system.l2_diagonal())
    else:
        raise ValueError(f"unknown preconditioner {prec!r}")

    b_tail = system.lam * g[1:]
    res = pcg(tail_apply, b_tail, x0=g[1:] if warm_start else None,
              prec=tail_prec, tol=tol, maxit=maxit)
    u = basis.apply(np.concatenate(([x_first], res.x)))
    return SolveResult(u, res.iterations, res.converged,
                       res.relative_residual, res.residual_history)


def plain_solve(system: ShiftedSystem, f, *, prec: str = "none",
                tol: float = 1e-10, maxit: int = 100,
                warm_start: bool = False) -> SolveResult:
    """Solve A u = lambda f by PCG in the original basis."""
    f = _check_vec(f, system.n)
    if prec == "none":
        p = None
    elif prec == "jacobi":
        d = 1.0 / system.jacobi_diagonal()
        p = lambda r: d * r
    elif prec == "l2":
        d = 1.0 / system.l2_diagonal()
        p = lambda r: d * r
    else:
        raise ValueError(f"unknown preconditioner {prec!r}")
    return pcg(system.apply, system.lam * f, x0=f if warm_start else None,
               prec=p, tol=tol, maxit=maxit)
