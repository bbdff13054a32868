"""Conditional and unconditional independence statistics."""

import numpy as np
import pytest

from causedir import (
    KciConfig,
    NumericError,
    center,
    gram,
    hsic_statistic,
    kci_statistic,
    ridge_residual_operator,
)
from causedir.independence import _clamp_nonnegative


def dense_kci_oracle(x_aug, u, w, bw_xu, bw_w, ridge):
    """Straight-from-formula reference: explicit H, loops for K, eigh for R."""
    n = x_aug.shape[0]

    def kmat(a, lam):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        if a.shape[0] != n:
            a = a.reshape(n, -1)
        k = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                d = a[i] - a[j]
                k[i, j] = np.exp(-float(d @ d) / lam)
        return k

    h = np.eye(n) - np.ones((n, n)) / n
    kx = h @ kmat(x_aug, bw_xu) @ h
    ku = h @ kmat(u, bw_xu) @ h
    kw = h @ kmat(w, bw_w) @ h
    mu, q = np.linalg.eigh(kw)
    r = q @ np.diag(ridge / (mu + ridge)) @ q.T
    return float(np.trace(r @ kx @ r @ (r @ ku @ r)) / n)


class TestRidgeResidualOperator:
    def test_constant_w_gives_identity(self):
        kw = center(gram(np.full((5, 1), 2.0), 1.0))
        np.testing.assert_allclose(ridge_residual_operator(kw, 1e-3), np.eye(5), atol=1e-12)

    def test_huge_ridge_limit_is_identity(self):
        rng = np.random.default_rng(2)
        kw = center(gram(rng.normal(size=(10, 1)), 0.5))
        np.testing.assert_allclose(ridge_residual_operator(kw, 1e9), np.eye(10), atol=1e-6)

    def test_matches_eigendecomposition_oracle(self):
        kw = center(gram(np.array([[0.0], [1.0], [2.0], [5.0]]), 0.25))
        ridge = 1e-3
        mu, q = np.linalg.eigh(kw.values)
        expected = q @ np.diag(ridge / (mu + ridge)) @ q.T
        np.testing.assert_allclose(ridge_residual_operator(kw, ridge), expected, atol=1e-10)

    def test_eigenvalues_in_unit_interval(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            kw = center(gram(rng.normal(size=(15, 2)), 0.4))
            eigs = np.linalg.eigvalsh(ridge_residual_operator(kw, 1e-3))
            assert eigs.min() > 0.0
            assert eigs.max() <= 1.0 + 1e-12

    def test_requires_centered_input(self):
        with pytest.raises(ValueError, match="centered"):
            ridge_residual_operator(gram(np.array([[0.0], [1.0]]), 1.0), 1e-3)


class TestKciStatistic:
    def test_constant_u_gives_zero(self):
        rng = np.random.default_rng(4)
        n = 10
        w = rng.normal(size=(n, 1))
        x_aug = np.column_stack([rng.normal(size=n), w])
        res = kci_statistic(x_aug, np.full((n, 1), 7.0), w)
        assert res.statistic == 0.0

    def test_frozen_value_from_dense_oracle(self):
        rng = np.random.default_rng(20240101)
        n = 6
        w = rng.normal(size=(n, 1))
        x_aug = np.column_stack([rng.normal(size=n), w])
        u = rng.normal(size=(n, 1))
        res = kci_statistic(x_aug, u, w)
        assert res.statistic == pytest.approx(4.234011935988606e-06, abs=1e-10)
        oracle = dense_kci_oracle(x_aug, u, w, bw_xu=0.8, bw_w=0.4, ridge=1e-3)
        assert res.statistic == pytest.approx(oracle, abs=1e-10)

    def test_random_instances_match_oracle(self):
        rng = np.random.default_rng(55)
        for _ in range(10):
            n = int(rng.integers(4, 11))
            dim_w = int(rng.integers(1, 3))
            w = rng.normal(size=(n, dim_w))
            x_aug = np.column_stack([rng.normal(size=n), w])
            u = rng.normal(size=(n, 1))
            res = kci_statistic(x_aug, u, w)
            oracle = dense_kci_oracle(x_aug, u, w, res.bandwidth_xu, res.bandwidth_w, res.ridge)
            assert res.statistic == pytest.approx(oracle, abs=1e-10)

    def test_joint_permutation_invariance(self):
        rng = np.random.default_rng(8)
        n = 12
        w = rng.normal(size=(n, 2))
        x_aug = np.column_stack([rng.normal(size=n), w])
        u = rng.normal(size=(n, 1))
        base = kci_statistic(x_aug, u, w).statistic
        perm = rng.permutation(n)
        permuted = kci_statistic(x_aug[perm], u[perm], w[perm]).statistic
        assert permuted == pytest.approx(base, abs=1e-10)

    def test_nonnegative_on_random_inputs(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            n = int(rng.integers(4, 20))
            w = rng.normal(size=(n, 1))
            x_aug = np.column_stack([rng.normal(size=n), w])
            u = rng.normal(size=(n, 1))
            assert kci_statistic(x_aug, u, w).statistic >= 0.0

    def test_huge_ridge_recovers_unconditional_trace(self):
        rng = np.random.default_rng(17)
        n = 30
        w = rng.normal(size=(n, 1))
        x_aug = np.column_stack([rng.normal(size=n), w])
        u = rng.normal(size=(n, 1))
        res = kci_statistic(x_aug, u, w, KciConfig(ridge=1e9))
        kx = center(gram(x_aug, res.bandwidth_xu)).values
        ku = center(gram(u, res.bandwidth_xu)).values
        unconditional = float(np.sum(kx * ku)) / n
        assert res.statistic == pytest.approx(unconditional, rel=1e-4)

    def test_metadata_fields(self):
        rng = np.random.default_rng(21)
        n = 9
        w = rng.normal(size=(n, 1))
        x_aug = np.column_stack([rng.normal(size=n), w])
        res = kci_statistic(x_aug, rng.normal(size=(n, 1)), w)
        assert res.n == n
        assert res.conditional
        assert (res.bandwidth_xu, res.bandwidth_w, res.ridge) == (0.8, 0.4, 1e-3)

    def test_row_count_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            kci_statistic(np.zeros((5, 2)), np.zeros((4, 1)), np.zeros((5, 1)))

    def test_too_few_rows(self):
        with pytest.raises(ValueError, match="at least 4"):
            kci_statistic(np.zeros((3, 2)), np.zeros((3, 1)), np.zeros((3, 1)))

    def test_empty_conditioning_set_rejected(self):
        with pytest.raises(ValueError, match="hsic"):
            kci_statistic(np.zeros((5, 1)), np.zeros((5, 1)), np.zeros((5, 0)))


class TestHsicStatistic:
    def test_constant_u_gives_zero(self):
        rng = np.random.default_rng(1)
        assert hsic_statistic(rng.normal(size=8), np.full(8, 2.0)).statistic == 0.0

    def test_equal_sequences_strictly_positive(self):
        x = np.arange(8.0)
        assert hsic_statistic(x, x.copy()).statistic > 0.0

    def test_frozen_value_from_dense_oracle(self):
        rng = np.random.default_rng(777)
        x = rng.normal(size=(8, 1))
        u = rng.normal(size=(8, 1))
        res = hsic_statistic(x, u)
        assert res.statistic == pytest.approx(0.024211184733992516, abs=1e-10)

    def test_random_instances_match_oracle(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            n = int(rng.integers(4, 11))
            x = rng.normal(size=(n, 1))
            u = rng.normal(size=(n, 1))
            res = hsic_statistic(x, u)
            kx = center(gram(x, res.bandwidth_xu)).values
            ku = center(gram(u, res.bandwidth_xu)).values
            assert res.statistic == pytest.approx(float(np.sum(kx * ku)) / n**2, abs=1e-10)

    def test_unconditional_metadata(self):
        res = hsic_statistic(np.arange(8.0), np.arange(8.0))
        assert not res.conditional
        assert res.bandwidth_w is None
        assert res.ridge is None


class TestClamp:
    def test_roundoff_negatives_clamp_to_zero(self):
        assert _clamp_nonnegative(-1e-11) == 0.0
        assert _clamp_nonnegative(0.0) == 0.0
        assert _clamp_nonnegative(3.5) == 3.5

    def test_large_negative_raises(self):
        with pytest.raises(NumericError):
            _clamp_nonnegative(-1e-9)
