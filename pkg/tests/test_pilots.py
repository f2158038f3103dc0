"""This module tests the coherence measures and the pilot pattern design."""

import os
import tempfile

import numpy as np

from hstce.channel import shift_matrix
from hstce.ici import build_measurement, partial_fourier, receive_pattern
from hstce.phy import qam4_modulate
from hstce.pilots import (
    CoherenceParams,
    PilotOptimizer,
    algorithm1,
    average_coherence,
    equidistant_pattern,
    exhaustive_search,
    load_pattern,
    mutual_coherence,
    pattern_coherence,
    perturb,
    random_pattern,
    save_pattern,
)
from tests.base_environment import TestEnvironment


class TestCoherence(TestEnvironment):
    """A class for testing the coherence measures."""

    def test_orthogonal(self) -> None:
        """Test that orthogonal columns have zero coherence."""
        self.assertEqual(average_coherence(np.eye(4)), 0.0)
        self.assertEqual(mutual_coherence(np.eye(4)), 0.0)
        # the equidistant pattern of the small link selects a full 16-point DFT
        self.assertEqual(pattern_coherence(equidistant_pattern(self.small), self.small), 0.0)

    def test_threshold(self) -> None:
        """Test that only pairs at or above the threshold are averaged."""
        matrix = self.rng.standard_normal((8, 12)) + 1j * self.rng.standard_normal((8, 12))
        mu_max = mutual_coherence(matrix)
        self.assertEqual(average_coherence(matrix, min(mu_max + 1e-9, 0.999)), 0.0)
        self.assertAlmostEqual(average_coherence(matrix, mu_max - 1e-12), mu_max)
        for delta in (0.05, 0.2, mu_max / 2):
            with self.subTest(delta=delta):
                mu = average_coherence(matrix, delta)
                self.assertGreaterEqual(mu, delta)
                self.assertLessEqual(mu, mu_max)

    def test_scaling_invariance(self) -> None:
        """Test that the receive permutation and the pilot amplitude leave the coherence unchanged."""
        params = self.paper
        w = random_pattern(params.K, params.P, self.rng)
        expected = pattern_coherence(w, params)
        S = partial_fourier(np.arange(params.K), params.K, params.L)
        self.assertAlmostEqual(average_coherence(S[w, :]), expected, places=12)
        for amplitude in (1.0, 2.0, -0.5 + 1.5j):
            x = qam4_modulate(self.rng.integers(0, 2, size=2 * params.K))
            x[w] = amplitude
            for q_star in range(params.Q + 1):
                with self.subTest(amplitude=amplitude, q_star=q_star):
                    v = receive_pattern(w, q_star, params)
                    received = shift_matrix(params.K, q_star - params.Q // 2) * x
                    reduced = received[np.ix_(v, w)] @ S[w, :]
                    self.assertAlmostEqual(average_coherence(reduced), expected, places=12)
            system = build_measurement(w, np.full(params.P, amplitude), params)
            self.assertAlmostEqual(average_coherence(system.A), expected, places=12)

    def test_zero_column(self) -> None:
        """Test that coherence is undefined for zero columns."""
        with self.assertRaises(ValueError):
            average_coherence(np.array([[1.0, 0.0], [1.0, 0.0]]))

    def test_invalid_threshold(self) -> None:
        """Test the validation of the threshold."""
        for delta in (0.0, 1.0):
            with self.subTest(delta=delta), self.assertRaises(ValueError):
                CoherenceParams(delta)


class TestPatterns(TestEnvironment):
    """A class for testing pattern construction and perturbation."""

    def test_equidistant(self) -> None:
        """Test the equidistant pattern of the full-size link."""
        w = equidistant_pattern(self.paper)
        self.assertEqual(w.size, self.paper.P)
        self.assertEqual(len(np.unique(w)), self.paper.P)
        self.assertEqual(w[1], 12)
        self.assertEqual(w[-1], 499)

    def test_perturb(self) -> None:
        """Test that one pilot moves to a free subcarrier and the input is kept."""
        w = equidistant_pattern(self.small)
        original = w.copy()
        for k in (0, 7, self.small.P - 1):
            with self.subTest(k=k):
                w_tilde = perturb(w, k, self.small.K, self.rng)
                np.testing.assert_array_equal(w, original)
                self.assertEqual(len(np.unique(w_tilde)), self.small.P)
                self.assertEqual(len(np.setdiff1d(w, w_tilde)), 1)
                np.testing.assert_array_equal(w_tilde, np.sort(w_tilde))

    def test_perturb_invalid(self) -> None:
        """Test the validation of the pilot position and a fully occupied symbol."""
        with self.assertRaises(ValueError):
            perturb(np.arange(4), 4, 8, self.rng)
        with self.assertRaises(ValueError):
            perturb(np.arange(8), 0, 8, self.rng)

    def test_exhaustive_search(self) -> None:
        """Test that the search returns the best of its candidates."""
        candidates_rng = np.random.default_rng(7)
        best = min(
            pattern_coherence(random_pattern(self.small.K, self.small.P, candidates_rng), self.small)
            for _ in range(20)
        )
        w = exhaustive_search(self.small, n_candidates=20, rng=np.random.default_rng(7))
        self.assertEqual(pattern_coherence(w, self.small), best)
        with self.assertRaises(ValueError):
            exhaustive_search(self.small, n_candidates=0)

    def test_save_load(self) -> None:
        """Test storing a pattern and the validation on loading."""
        w = random_pattern(self.small.K, self.small.P, self.rng)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "pattern.txt")
            save_pattern(path, w)
            np.testing.assert_array_equal(load_pattern(path, self.small), w)
            with self.assertRaises(ValueError):
                load_pattern(path, self.paper)

            with open(path, "w") as f:
                f.write("1\n1\n")
            with self.assertRaises(ValueError):
                load_pattern(path)
            with open(path, "w") as f:
                f.write("1\nx\n")
            with self.assertRaises(ValueError):
                load_pattern(path)


class TestPilotOptimizer(TestEnvironment):
    """A class for testing the stochastic pattern design."""

    def test_budget(self) -> None:
        """Test that the iteration budget must be a multiple of P."""
        with self.assertRaises(ValueError):
            PilotOptimizer(self.small, iterations=20)
        with self.assertRaises(ValueError):
            PilotOptimizer(self.small, delta=1.5)

    def test_state(self) -> None:
        """Test the occupation probabilities and the trace after a full run."""
        optimizer = PilotOptimizer(self.small, iterations=64)
        w0 = random_pattern(self.small.K, self.small.P, self.rng)
        state = optimizer.run(w0, self.rng)
        self.assertEqual(state.Gamma.size, 65)
        self.assertAlmostEqual(float(state.Gamma.sum()), 1.0)
        self.assertEqual(state.m, 64)
        self.assertEqual(len(state.trace), 64)
        self.assertAlmostEqual(float(state.Gamma[state.iota]), float(state.Gamma.max()))
        self.assertEqual(state.w_hat.size, self.small.P)
        self.assertEqual(len(np.unique(state.w_hat)), self.small.P)
        self.assertAlmostEqual(state.mu, optimizer.objective(state.w))

        # accepted steps strictly lower the objective, rejected ones keep it
        previous = optimizer.objective(w0)
        for _, mu, accepted in state.trace:
            if accepted:
                self.assertLess(mu, previous)
            else:
                self.assertEqual(mu, previous)
            previous = mu

    def test_invalid_start(self) -> None:
        """Test the validation of the initial pattern."""
        optimizer = PilotOptimizer(self.small, iterations=16)
        for w0 in (np.arange(15), np.zeros(16, dtype=int), np.arange(60, 76)):
            with self.subTest(w0=w0), self.assertRaises(ValueError):
                optimizer.init_state(w0)

    def test_optimal_start(self) -> None:
        """Test that a zero coherence start is never left."""
        w0 = equidistant_pattern(self.small)
        np.testing.assert_array_equal(self.designed_pattern(self.small), w0)

    def test_lowers_coherence(self) -> None:
        """Test that the design never raises and almost always lowers the coherence of a random start."""
        lowered = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            w0 = random_pattern(self.small.K, self.small.P, rng)
            w = algorithm1(w0, self.small, rng=rng, iterations=192)
            before, after = pattern_coherence(w0, self.small), pattern_coherence(w, self.small)
            self.assertLessEqual(after, before)
            lowered += after < before
        self.assertGreaterEqual(lowered, 90)

    def test_deterministic(self) -> None:
        """Test that equal seeds give equal designs."""
        w0 = equidistant_pattern(self.paper)
        a = algorithm1(w0, self.paper, rng=np.random.default_rng(3), iterations=80)
        b = algorithm1(w0, self.paper, rng=np.random.default_rng(3), iterations=80)
        np.testing.assert_array_equal(a, b)

    def test_lowers_equidistant_coherence(self) -> None:
        """Test the design of the full-size link from the equidistant start."""
        w0 = equidistant_pattern(self.paper)
        before = pattern_coherence(w0, self.paper)
        lowered = 0
        for seed in range(100):
            optimizer = PilotOptimizer(self.paper, iterations=200)
            state = optimizer.run(w0, np.random.default_rng(seed))
            after = optimizer.objective(state.w_hat)
            self.assertLessEqual(after, before)
            self.assertTrue(all(mu <= before for _, mu, _ in state.trace))
            lowered += after < before
        self.assertGreaterEqual(lowered, 95)
