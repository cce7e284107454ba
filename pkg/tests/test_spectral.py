"""Dense spectral verifier: bounds, special cases, leverage, conditioning."""

import numpy as np
import pytest

from nldenoise import spectral as S
from nldenoise.kernel import AnovaOperator


def _random_kernel(rng):
    n = int(rng.integers(20, 120))
    d = int(rng.integers(1, 7))
    feats = rng.uniform(0, 255, size=(n, d))
    wins = [np.arange(i, min(i + 3, d)) for i in range(0, d, 3)]
    sigma = float(rng.uniform(10, 150))
    return AnovaOperator(feats, wins, sigma, mode="exact")


class TestEigSymmetric:
    def test_sorted_ascending(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((20, 20))
        eigs = S.eig_symmetric(m + m.T)
        assert np.all(np.diff(eigs) >= 0)

    def test_oracle(self):
        m = np.diag([3.0, 1.0, 2.0])
        assert np.array_equal(S.eig_symmetric(m), [1.0, 2.0, 3.0])

    def test_asymmetric_rejected(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            S.eig_symmetric(m)


class TestBounds:
    @pytest.mark.parametrize("seed", range(8))
    def test_random_kernels_pass(self, seed):
        rng = np.random.default_rng(100 + seed)
        op = _random_kernel(rng)
        lam = float(10 ** rng.uniform(-8, 0))
        mu = float(10 ** rng.uniform(-3, 0))
        report = S.bounds_report(op, lam, mu)
        bad = [c for c in report if not c.ok]
        assert not bad, "\n".join(str(c) for c in bad)

    def test_report_is_comprehensive(self):
        rng = np.random.default_rng(0)
        report = S.bounds_report(_random_kernel(rng), 1e-3, 1e-2)
        names = {c.name for c in report}
        assert "max-degree lower bound on rho(L)" in names
        assert "jacobi upper spectral bound" in names
        assert "deflated block closed form" in names
        assert len(report) >= 15


class TestCompleteGraph:
    @pytest.mark.parametrize("n", [5, 30, 100])
    def test_equalities_attained(self, n):
        for check in S.complete_graph_check(n):
            assert check.ok, str(check)


class TestLeverage:
    @pytest.mark.parametrize("delta", [0.0, 0.3, 1.0])
    def test_rank_one_shift(self, delta):
        rng = np.random.default_rng(7)
        op = _random_kernel(rng)
        for check in S.leverage_check(op, 1e-2, 1e-2, delta=delta):
            assert check.ok, str(check)


class TestCondition:
    def test_estimate_brackets_exact(self):
        rng = np.random.default_rng(11)
        op = _random_kernel(rng)
        est, exact = S.condition_estimate(op, 1e-3, 1e-2)
        # kappa(A) = 1 + mu rho(L)/lam with rho(L) in [max eta, 2 max eta)
        assert exact <= est * (1 + 1e-12)
        assert est < 2.0 * exact

    def test_spread_positive(self):
        rng = np.random.default_rng(13)
        op = _random_kernel(rng)
        assert S.spectral_spread(op, 1e-2, 1e-2) > 0.0
