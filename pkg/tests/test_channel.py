"""This module tests the CE-BEM channel model."""

import numpy as np

from hstce.channel import (
    basis_freq,
    ce_basis,
    channel_matrix,
    coefficients_from_blocks,
    dft_matrix,
    ici_split,
    shift_matrix,
    sparsity_report,
    synthesize_coefficients,
    time_domain_matrix,
    time_domain_taps,
)
from tests.base_environment import TestEnvironment


class TestBasis(TestEnvironment):
    """A class for testing the basis functions and their frequency-domain form."""

    def test_dft_unitary(self) -> None:
        """Test that the DFT matrix is unitary."""
        F = dft_matrix(16)
        np.testing.assert_allclose(F @ F.conj().T, np.eye(16), atol=1e-12)

    def test_basis_is_shift(self) -> None:
        """Test that every basis function is a circular shift in the frequency domain."""
        Q = 4
        for K in (8, 16, 32, 64):
            for q in range(Q + 1):
                with self.subTest(K=K, q=q):
                    error = np.max(np.abs(basis_freq(K, Q, q) - shift_matrix(K, q - Q // 2)))
                    self.assertLess(error, 1e-10)

    def test_invalid_index(self) -> None:
        """Test that basis indices outside [0, Q] are rejected."""
        with self.assertRaises(ValueError):
            ce_basis(16, 4, 5)
        with self.assertRaises(ValueError):
            ce_basis(16, 4, -1)


class TestChannelMatrix(TestEnvironment):
    """A class for testing the banded channel matrix."""

    def test_matches_time_domain(self) -> None:
        """Test that the banded matrix is the DFT of the time-varying convolution."""
        params = self.small
        coeffs = synthesize_coefficients(params, 3, 0.2, self.rng)
        H = channel_matrix(coeffs, params)
        F = dft_matrix(params.K)
        H_time = time_domain_matrix(time_domain_taps(coeffs, params))
        np.testing.assert_allclose(H.H, F @ H_time @ F.conj().T, atol=1e-10)

    def test_matches_basis_sum(self) -> None:
        """Test the matrix against the explicit sum of shifted diagonals."""
        params = self.small
        coeffs = synthesize_coefficients(params, 1, 0.1, self.rng)
        F_L = np.sqrt(params.K) * dft_matrix(params.K)[:, : params.L]
        expected = sum(
            basis_freq(params.K, params.Q, q) @ np.diag(F_L @ coeffs.blocks[q]) for q in range(params.Q + 1)
        )
        np.testing.assert_allclose(channel_matrix(coeffs, params).H, expected, atol=1e-10)

    def test_apply(self) -> None:
        """Test that applying the diagonals equals the dense product."""
        params = self.small
        H = channel_matrix(synthesize_coefficients(params, 0, 0.3, self.rng), params)
        x = self.rng.standard_normal(params.K) + 1j * self.rng.standard_normal(params.K)
        np.testing.assert_allclose(H.apply(x), H.H @ x, atol=1e-10)
        with self.assertRaises(ValueError):
            H.apply(np.ones(params.K + 1))

    def test_wrong_length(self) -> None:
        """Test that a coefficient vector of the wrong size is rejected."""
        coeffs = synthesize_coefficients(self.small, 2, 0.0, self.rng)
        with self.assertRaises(ValueError):
            channel_matrix(coeffs, self.small.replace(L=8))

    def test_ici_split(self) -> None:
        """Test that a channel concentrated on the zero shift carries no interference."""
        params = self.small
        H = channel_matrix(synthesize_coefficients(params, params.Q // 2, 0.0, self.rng), params)
        free, ici = ici_split(H)
        np.testing.assert_allclose(free + ici, H.H)
        self.assertEqual(np.count_nonzero(ici), 0)

        shifted = channel_matrix(synthesize_coefficients(params, 0, 0.0, self.rng), params)
        free, ici = ici_split(shifted)
        self.assertEqual(np.count_nonzero(free), 0)


class TestSynthesis(TestEnvironment):
    """A class for testing the coefficient draws."""

    def test_sparse_dominant(self) -> None:
        """Test that without leakage only S taps of the dominant block are active."""
        params = self.small
        for q_star in range(params.Q + 1):
            with self.subTest(q_star=q_star):
                coeffs = synthesize_coefficients(params, q_star, 0.0, self.rng)
                self.assertAlmostEqual(float(np.linalg.norm(coeffs.c)), 1.0)
                self.assertEqual(np.count_nonzero(coeffs.c), params.S)
                np.testing.assert_array_equal(np.flatnonzero(coeffs.dominant), coeffs.support)
                self.assertEqual(channel_matrix(coeffs, params).dominant_index, q_star)

    def test_leakage_fraction(self) -> None:
        """Test that the off-dominant blocks hold the requested power fraction."""
        params = self.small
        for rho in (0.05, 0.1, 0.5):
            with self.subTest(rho=rho):
                coeffs = synthesize_coefficients(params, 2, rho, self.rng)
                off = 1.0 - float(np.sum(np.abs(coeffs.dominant) ** 2))
                self.assertAlmostEqual(off, rho)
                self.assertEqual(set(np.flatnonzero(np.any(coeffs.blocks != 0, axis=0))), set(coeffs.support))

    def test_deterministic(self) -> None:
        """Test that equal seeds give equal draws."""
        a = synthesize_coefficients(self.small, 1, 0.1, np.random.default_rng(5))
        b = synthesize_coefficients(self.small, 1, 0.1, np.random.default_rng(5))
        np.testing.assert_array_equal(a.c, b.c)

    def test_invalid(self) -> None:
        """Test the validation of the leakage and the dominant index."""
        with self.assertRaises(ValueError):
            synthesize_coefficients(self.small, 0, 1.0, self.rng)
        with self.assertRaises(ValueError):
            synthesize_coefficients(self.small, self.small.Q + 1, 0.0, self.rng)

    def test_sparsity_report(self) -> None:
        """Test that the dominant entries of a leak-free draw are exactly its support."""
        coeffs = synthesize_coefficients(self.small, 3, 0.0, self.rng)
        report = sparsity_report(coeffs, 1e-12)
        self.assertEqual(report, [(3, int(tap)) for tap in coeffs.support])
        empty = coefficients_from_blocks(np.zeros((3, 4)), q_star=1)
        self.assertEqual(sparsity_report(empty, 0.01), [])
