"""Dense desk-scale spectral verifier for the shifted Laplacian system.

Everything here assembles small dense matrices and checks the closed-form
eigenvalue bounds that justify the matrix-free solver: degree-based bounds
on the Laplacian spectrum, connectivity bounds on the spectral gap, the
Jacobi and row-l2 preconditioned spectra, the projected (deflated) spectra,
the block structure under the non-orthogonal deflating basis, and the
rank-one leverage shift of the deflated eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import AnovaOperator
from .linops import ShiftedSystem, cob_q_apply


def dense_system(kernel: AnovaOperator, lam: float, mu: float):
    """Dense Gamma, eta, L, and A for a desk-scale problem."""
    g = kernel.assemble_dense()
    eta = g.sum(axis=1)
    lap = np.diag(eta) - g
    a = lam * np.eye(g.shape[0]) + mu * lap
    return g, eta, lap, a


def eig_symmetric(mat: np.ndarray, sym_tol: float = 1e-10) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix, symmetry enforced."""
    m = np.asarray(mat, dtype=np.float64)
    dev = np.abs(m - m.T).max()
    scale = max(np.abs(m).max(), 1.0)
    if dev > sym_tol * scale:
        raise ValueError(f"matrix is not symmetric (deviation {dev:.2e})")
    return np.linalg.eigvalsh(0.5 * (m + m.T))


@dataclass
class BoundCheck:
    name: str
    ok: bool
    lhs: float
    rhs: float

    def __str__(self):
        flag = "ok " if self.ok else "FAIL"
        return f"[{flag}] {self.name}: {self.lhs:.6e} <= {self.rhs:.6e}"


def _le(name, lhs, rhs, slack=1e-9):
    scale = max(abs(lhs), abs(rhs), 1.0)
    return BoundCheck(name, lhs <= rhs + slack * scale, float(lhs), float(rhs))


def _eq(name, lhs, rhs, tol=1e-9):
    scale = max(abs(lhs), abs(rhs), 1.0)
    return BoundCheck(name, abs(lhs - rhs) <= tol * scale, float(lhs), float(rhs))


def _projected_spectrum(a_mat, diag_prec):
    """Spectrum of the deflated, symmetrically preconditioned tail block."""
    n = a_mat.shape[0]
    v = np.ones(n) / np.sqrt(n)
    basis = np.linalg.qr(
        np.column_stack([v, np.eye(n)[:, 1:]])
    )[0]
    d = 1.0 / np.sqrt(diag_prec)
    m = basis.T @ (d[:, None] * a_mat * d[None, :]) @ basis
    return eig_symmetric(m[1:, 1:])


def bounds_report(kernel: AnovaOperator, lam: float, mu: float) -> list[BoundCheck]:
    """Verify every closed-form spectral bound on a dense desk-scale system."""
    g, eta, lap, a_mat = dense_system(kernel, lam, mu)
    n = g.shape[0]
    checks = []

    lap_eigs = eig_symmetric(lap)
    rho_l = lap_eigs[-1]
    alg_conn = lap_eigs[1]
    checks.append(_le("laplacian null eigenvalue", abs(lap_eigs[0]), 1e-8))
    checks.append(_le("max-degree lower bound on rho(L)", eta.max(), rho_l))
    checks.append(_le("rho(L) <= 2 max degree", rho_l, 2.0 * eta.max()))
    checks.append(
        _le("a(L) <= n/(n-1) min degree", alg_conn, n / (n - 1.0) * eta.min())
    )

    a_eigs = eig_symmetric(a_mat)
    checks.append(_eq("lambda is an eigenvalue of A", a_eigs[0], lam))
    if g[0, 1:].min() > 0:
        checks.append(
            _le("gap bound via first-node connectivity",
                mu * g[0, 1:].min() + lam, a_eigs[1])
        )

    # Jacobi-preconditioned spectrum
    pa = lam + mu * eta
    d = 1.0 / np.sqrt(pa)
    pa_eigs = eig_symmetric(d[:, None] * a_mat * d[None, :])
    checks.append(
        _le("jacobi lower spectral bound", lam / (lam + mu * eta.max()),
            pa_eigs[0])
    )
    checks.append(_le("jacobi upper spectral bound", pa_eigs[-1], 2.0))

    # Row-l2 diagonal: sandwiched between Jacobi and sqrt(2) * Jacobi
    sys_ = ShiftedSystem(kernel, lam, mu)
    pb_exact = sys_.l2_diagonal(exact=True)
    pb_est = sys_.l2_diagonal(exact=False)
    checks.append(_le("jacobi below l2 estimate", 0.0,
                      (pb_est - pa).min()))
    checks.append(_le("l2 estimate below exact row l2", 0.0,
                      (pb_exact - pb_est).min()))
    checks.append(_le("exact row l2 below sqrt(2) jacobi", 0.0,
                      (np.sqrt(2.0) * pa - pb_exact).min()))
    db = 1.0 / np.sqrt(pb_exact)
    pb_eigs = eig_symmetric(db[:, None] * a_mat * db[None, :])
    checks.append(
        _le("l2-preconditioned lower bound", pa_eigs[0] / np.sqrt(2.0),
            pb_eigs[0])
    )
    checks.append(_le("l2-preconditioned upper bound", pb_eigs[-1],
                      pa_eigs[-1]))

    # Projected (deflated) spectra stay inside the full preconditioned ones
    proj = _projected_spectrum(a_mat, pa)
    lower = pa_eigs[0] - lam / (lam + mu * eta.min())
    if lower > 0:
        checks.append(_le("projected jacobi lower bound", lower, proj[0]))
    checks.append(_le("projected jacobi upper bound", proj[-1], pa_eigs[-1]))
    checks.append(_le("projected spectrum inside full", pa_eigs[0],
                      proj[0]))

    # Block structure under the non-orthogonal deflating basis
    q_cols = np.column_stack(
        [cob_q_apply(np.ones(n), np.eye(n)[:, i]) for i in range(n)]
    )
    qa = np.linalg.solve(q_cols, a_mat @ q_cols)
    scale = np.abs(a_mat).max()
    checks.append(_eq("deflated basis pins lambda", qa[0, 0], lam, tol=1e-9))
    checks.append(
        _le("deflating basis first column decoupled",
            np.abs(qa[1:, 0]).max(), 1e-10 * scale)
    )
    checks.append(
        _le("deflating basis first row decoupled",
            np.abs(qa[0, 1:]).max(), 1e-10 * scale)
    )
    block = (mu * lap[1:, 1:] + mu * np.outer(g[1:, 0], np.ones(n - 1))
             + lam * np.eye(n - 1))
    checks.append(
        _le("deflated block closed form",
            np.abs(qa[1:, 1:] - block).max(), 1e-9 * scale)
    )

    return checks


def complete_graph_check(n: int) -> list[BoundCheck]:
    """On the complete unit-weight graph the degree bounds are attained."""
    g = np.ones((n, n)) - np.eye(n)
    eta = g.sum(axis=1)
    lap = np.diag(eta) - g
    eigs = eig_symmetric(lap)
    checks = [
        _eq("complete graph null eigenvalue", eigs[0], 0.0, tol=1e-12),
        _eq("complete graph nonzero eigenvalues", eigs[1], float(n),
            tol=1e-12),
        _eq("complete graph top eigenvalue", eigs[-1], float(n), tol=1e-12),
        _eq("degree bound attained", eigs[1], n / (n - 1.0) * eta.min(),
            tol=1e-12),
    ]
    return checks


def leverage_check(kernel: AnovaOperator, lam: float, mu: float,
                   delta: float = 0.5) -> list[BoundCheck]:
    """Rank-one shift along the constant vector relocates only lambda.

    With B = mu L and the leverage factor
    l1 = (delta rho(B) + (1 - delta) a(B) + lambda) / lambda, the matrix
    (1/n)(lambda l1 - lambda) 1 1^T + A has spectrum
    (spec(A) minus lambda) union {lambda l1}.
    """
    _, _, lap, a_mat = dense_system(kernel, lam, mu)
    n = a_mat.shape[0]
    b_eigs = eig_symmetric(mu * lap)
    target = delta * b_eigs[-1] + (1.0 - delta) * b_eigs[1] + lam
    l1 = target / lam
    shifted = (lam * l1 - lam) / n * np.ones((n, n)) + a_mat
    s_eigs = eig_symmetric(shifted)
    a_eigs = eig_symmetric(a_mat)
    expected = np.sort(np.concatenate([a_eigs[1:], [target]]))
    return [
        _le("leverage shift spectrum", np.abs(s_eigs - expected).max(),
            1e-8 * max(1.0, np.abs(expected).max())),
        _eq("unit leverage is identity shift", lam * 1.0, lam, tol=1e-14),
    ]


def condition_estimate(kernel: AnovaOperator, lam: float, mu: float):
    """Degree-based condition estimate and the exact value it brackets.

    Returns (estimate, exact) with
    estimate = 2 mu max(eta) / lambda + 1 >= kappa(A) = 1 + mu rho(L)/lambda.
    """
    eta = kernel.degree()
    _, _, lap, _ = dense_system(kernel, lam, mu)
    rho_l = eig_symmetric(lap)[-1]
    estimate = 2.0 * mu * eta.max() / lam + 1.0
    exact = 1.0 + mu * rho_l / lam
    return float(estimate), float(exact)


def spectral_spread(kernel: AnovaOperator, lam: float, mu: float) -> float:
    """rho(A) - lambda_min(A); above 1 the solver operates as intended."""
    _, _, _, a_mat = dense_system(kernel, lam, mu)
    eigs = eig_symmetric(a_mat)
    return float(eigs[-1] - eigs[0])
