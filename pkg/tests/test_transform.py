"""Transform tests: exact oracles first, fast paths against them."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nldenoise import transform as T
from nldenoise.errors import DimensionMismatchError, ScalingOverflowError


class TestNodeSet:
    def test_valid(self):
        ns = T.NodeSet(np.array([[0.0, 0.1], [-0.5, 0.49]]))
        assert ns.dim == 2 and len(ns) == 2

    def test_rejects_out_of_torus(self):
        with pytest.raises(ValueError):
            T.NodeSet(np.array([0.5]))

    def test_rejects_high_dim(self):
        with pytest.raises(DimensionMismatchError):
            T.NodeSet(np.zeros((3, 4)))


class TestNdftOracle:
    def test_single_mode_phase(self):
        # coefficient 1 on k = 1 evaluated at x = 1/4: e^{-2 pi i / 4} = -i
        c = np.zeros(8, dtype=complex)
        c[4 + 1] = 1.0
        val = T.ndft(c, np.array([0.25]))
        assert np.allclose(val, [-1j], atol=1e-14)

    def test_constant_mode(self):
        # k = 0 contributes e^0 = 1 at every node
        c = np.zeros(8, dtype=complex)
        c[4] = 2.5
        val = T.ndft(c, np.array([-0.5, 0.0, 0.3]))
        assert np.allclose(val, 2.5, atol=1e-14)

    def test_2d_separable(self):
        # product of per-dimension phases, frozen by hand:
        # k = (1, -2) at x = (1/8, 1/4): exp(-2 pi i (1/8 - 1/2))
        c = np.zeros((8, 8), dtype=complex)
        c[4 + 1, 4 - 2] = 1.0
        val = T.ndft(c, np.array([[0.125, 0.25]]))
        expected = np.exp(-2j * np.pi * (0.125 - 0.5))
        assert np.allclose(val, expected, atol=1e-14)

    def test_adjoint_is_conjugate_transpose(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-0.5, 0.5, size=(20, 2))
        c = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        v = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        lhs = np.vdot(v, T.ndft(c, x))
        rhs = np.vdot(T.ndft_adjoint(v, x, (8, 8)), c)
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


class TestNfft:
    @pytest.mark.parametrize("d,m_band", [(1, 32), (2, 16), (3, 8)])
    def test_matches_ndft(self, d, m_band):
        rng = np.random.default_rng(d)
        shape = (m_band,) * d
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        x = rng.uniform(-0.5, 0.5, size=(40, d))
        plan = T.NfftPlan(shape)
        err = np.abs(T.nfft(c, x, plan) - T.ndft(c, x)).max()
        assert err <= 1e-6 * np.abs(T.ndft(c, x)).max()

    def test_1d_high_accuracy(self):
        rng = np.random.default_rng(0)
        c = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        x = rng.uniform(-0.5, 0.5, size=(100, 1))
        plan = T.NfftPlan((64,), cutoff=8)
        err = np.abs(T.nfft(c, x, plan) - T.ndft(c, x)).max()
        assert err <= 1e-10 * np.abs(c).sum()

    @pytest.mark.parametrize("d,m_band", [(1, 32), (2, 16), (3, 8)])
    def test_adjoint_matches_exact(self, d, m_band):
        rng = np.random.default_rng(10 + d)
        shape = (m_band,) * d
        x = rng.uniform(-0.5, 0.5, size=(40, d))
        v = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        plan = T.NfftPlan(shape)
        exact = T.ndft_adjoint(v, x, shape)
        err = np.abs(T.nfft_adjoint(v, x, plan) - exact).max()
        assert err <= 1e-6 * np.abs(exact).max()

    def test_adjoint_identity(self):
        # <nfft(c), v> == <c, nfft_adjoint(v)> holds to near machine
        # precision because both sides use the same window
        rng = np.random.default_rng(5)
        c = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        x = rng.uniform(-0.5, 0.5, size=(25, 1))
        v = rng.standard_normal(25) + 1j * rng.standard_normal(25)
        plan = T.NfftPlan((32,))
        lhs = np.vdot(v, T.nfft(c, x, plan))
        rhs = np.vdot(T.nfft_adjoint(v, x, plan), c)
        assert abs(lhs - rhs) <= 1e-8 * abs(lhs)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            T.nfft(np.zeros(16, complex), np.zeros((3, 1)), T.NfftPlan((32,)))

    def test_odd_bandwidth_rejected(self):
        with pytest.raises(ValueError):
            T.NfftPlan((15,))

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_adjoint_identity_property(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-0.5, 0.5, size=(10, 1))
        c = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        v = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        plan = T.NfftPlan((16,))
        lhs = np.vdot(v, T.nfft(c, x, plan))
        rhs = np.vdot(T.nfft_adjoint(v, x, plan), c)
        assert abs(lhs - rhs) <= 1e-8 * max(abs(lhs), 1.0)


class TestGaussTransform:
    def test_direct_frozen(self):
        # two unit sources at 0 and 1, target at 0: 1 + e^{-1}
        g = T.gauss_transform_direct(np.array([0.0, 1.0]), np.array([0.0]),
                                     np.array([1.0, 1.0]), 1.0)
        assert np.allclose(g, [1.0 + np.exp(-1.0)], atol=1e-14)

    def test_direct_2d_frozen(self):
        # source at (0,0), target at (3,4): exp(-25 sigbar)
        g = T.gauss_transform_direct(np.array([[0.0, 0.0]]),
                                     np.array([[3.0, 4.0]]),
                                     np.array([2.0]), 0.01)
        assert np.allclose(g, [2.0 * np.exp(-0.25)], atol=1e-14)

    def test_fast_matches_simple(self):
        plan = T.FastsumPlan.build(np.array([0.0, 1.0]), 1.0)
        g = T.gauss_transform_fast(np.array([0.0, 1.0]), np.array([0.0]),
                                   np.array([1.0, 1.0]), plan)
        assert abs(g[0] - (1.0 + np.exp(-1.0))) <= 1e-7

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_fast_matches_direct(self, d):
        rng = np.random.default_rng(20 + d)
        pts = rng.uniform(0, 255, size=(400, d))
        sigbar = 1.0 / 40.0 ** 2
        alpha = rng.standard_normal(400)
        plan = T.FastsumPlan.build(pts, sigbar)
        fast = T.gauss_transform_fast(pts, pts, alpha, plan)
        exact = T.gauss_transform_direct(pts, pts, alpha, sigbar)
        assert np.abs(fast - exact).max() <= 1e-6 * np.abs(exact).max()

    def test_scaling_overflow(self):
        plan = T.FastsumPlan.build(np.array([0.0, 1.0]), 1.0)
        with pytest.raises(ScalingOverflowError):
            T.gauss_transform_fast(np.array([0.0, 5.0]), np.array([0.0]),
                                   np.array([1.0, 1.0]), plan)

    def test_expansion_degree_grows(self):
        assert T.expansion_degree(1.0) == 16
        assert T.expansion_degree(1000.0) > T.expansion_degree(100.0)
        assert T.expansion_degree(1e9) == T.MAX_EXPANSION

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            T.FastsumPlan.build(np.array([0.0, 1.0]), -1.0)
        with pytest.raises(ValueError):
            T.gauss_transform_direct(np.zeros(2), np.zeros(2),
                                     np.ones(2), 0.0)


class TestProperties:
    def test_error_monotone_in_cutoff(self):
        # window error decreases with the cutoff, up to the fp floor
        rng = np.random.default_rng(31)
        shape = (32,)
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        x = rng.uniform(-0.5, 0.5, size=(50, 1))
        exact = T.ndft(c, x)
        errs = []
        for m in (2, 4, 6, 8):
            plan = T.NfftPlan(shape, cutoff=m)
            errs.append(np.abs(T.nfft(c, x, plan) - exact).max())
        for lo, hi in zip(errs[1:], errs[:-1]):
            assert lo <= 10.0 * hi  # slack for the rounding floor

    def test_fast_gauss_permutation_invariance(self):
        rng = np.random.default_rng(32)
        pts = rng.uniform(0, 255, size=(300, 2))
        alpha = rng.standard_normal(300)
        sigbar = 1.0 / 40.0 ** 2
        plan = T.FastsumPlan.build(pts, sigbar)
        base = T.gauss_transform_fast(pts, pts, alpha, plan)
        perm = rng.permutation(300)
        permuted = T.gauss_transform_fast(pts[perm], pts[perm], alpha[perm],
                                          plan)
        assert np.abs(permuted - base[perm]).max() <= 1e-9 * np.abs(base).max()
