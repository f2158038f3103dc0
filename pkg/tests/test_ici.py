"""This module tests the position-based ICI elimination."""

import numpy as np

from hstce.channel import dft_matrix, shift_matrix
from hstce.ici import (
    PilotPattern,
    build_measurement,
    extract_pilots,
    guard_pilot_count,
    ici_power_ratio,
    naive_extract,
    partial_fourier,
    receive_pattern,
)
from hstce.phy import apply_channel
from hstce.pilots import equidistant_pattern
from tests.base_environment import TestEnvironment


class TestPilotPattern(TestEnvironment):
    """A class for testing pilot patterns."""

    def test_invalid(self) -> None:
        """Test the rejection of empty, duplicate and negative indices."""
        for w in ([], [1, 1], [-1, 2]):
            with self.subTest(w=w), self.assertRaises(ValueError):
                PilotPattern(np.array(w, dtype=int))
        with self.assertRaises(ValueError):
            PilotPattern(np.array([3, 64])).validate(64)

    def test_with_receive(self) -> None:
        """Test that the receive patterns follow the dominant indices."""
        pattern = PilotPattern(np.array([0, 10, 63])).with_receive([0, 2, 4], self.small)
        np.testing.assert_array_equal(pattern.receive[0], [62, 8, 61])
        np.testing.assert_array_equal(pattern.receive[1], [0, 10, 63])
        np.testing.assert_array_equal(pattern.receive[2], [2, 12, 1])
        self.assertEqual(pattern.P, 3)

    def test_identity_selection(self) -> None:
        """Test that the receive rows of the shifted transmit columns form an identity block."""
        params = self.paper
        w = np.sort(self.rng.choice(params.K, size=params.P, replace=False))
        for q_star in range(params.Q + 1):
            with self.subTest(q_star=q_star):
                v = receive_pattern(w, q_star, params)
                block = shift_matrix(params.K, q_star - params.Q // 2)[np.ix_(v, w)]
                np.testing.assert_array_equal(block, np.eye(params.P))

    def test_shift_composition(self) -> None:
        """Test that two receive shifts add up to one shift."""
        params = self.paper
        w = equidistant_pattern(params)
        half = params.Q // 2
        for q1 in range(params.Q + 1):
            for q2 in range(params.Q + 1):
                if not 0 <= q1 + q2 - half <= params.Q:
                    continue
                with self.subTest(q1=q1, q2=q2):
                    twice = receive_pattern(receive_pattern(w, q1, params), q2, params)
                    np.testing.assert_array_equal(twice, receive_pattern(w, q1 + q2 - half, params))

    def test_receive_invalid(self) -> None:
        """Test the validation of the dominant index and the pilot range."""
        with self.assertRaises(ValueError):
            receive_pattern(np.array([0]), self.small.Q + 1, self.small)
        with self.assertRaises(ValueError):
            receive_pattern(np.array([self.small.K]), 0, self.small)


class TestMeasurement(TestEnvironment):
    """A class for testing the sensing matrix and the pilot observations."""

    def test_partial_fourier(self) -> None:
        """Test the partial Fourier rows against the scaled DFT matrix."""
        w = np.array([1, 5, 40])
        expected = np.sqrt(64) * dft_matrix(64)[w, :16]
        np.testing.assert_allclose(partial_fourier(w, 64, 16), expected, atol=1e-12)

    def test_ici_free_observation(self) -> None:
        """Test that shifted pilots equal the sensing matrix applied to the dominant block."""
        params = self.small
        for q_star in range(params.Q + 1):
            with self.subTest(q_star=q_star):
                coeffs, H, symbol = self.draw_link(params, q_star, seed=q_star)
                [rx] = apply_channel(symbol.x, [H], None)
                w = symbol.pattern.w
                system = build_measurement(w, symbol.pilot_symbols, params)
                y_obs = extract_pilots(rx.y, receive_pattern(w, q_star, params))
                np.testing.assert_allclose(y_obs, system.A @ coeffs.dominant, atol=1e-10)
                self.assertEqual(ici_power_ratio(y_obs, system.A @ coeffs.dominant), 0.0)

    def test_exact_elimination_full_size(self) -> None:
        """Test that the shifted pilots of the full-size link carry no interference at any dominant index."""
        params = self.paper
        worst = 0.0
        for trial in range(100):
            q_star = trial % (params.Q + 1)
            coeffs, H, symbol = self.draw_link(params, q_star, seed=trial)
            self.assertEqual(symbol.pattern.P, params.P)
            [rx] = apply_channel(symbol.x, [H], None)
            w = symbol.pattern.w
            system = build_measurement(w, symbol.pilot_symbols, params)
            y_obs = extract_pilots(rx.y, receive_pattern(w, q_star, params))
            worst = max(worst, float(np.max(np.abs(y_obs - system.A @ coeffs.dominant))))
        self.assertLess(worst, 1e-10)

    def test_naive_observation(self) -> None:
        """Test that the unshifted pilots pick up interference away from the broadside point."""
        params = self.small
        coeffs, H, symbol = self.draw_link(params, q_star=0)
        [rx] = apply_channel(symbol.x, [H], None)
        system = build_measurement(symbol.pattern.w, symbol.pilot_symbols, params)
        clean = system.A @ coeffs.dominant
        self.assertGreater(ici_power_ratio(naive_extract(rx.y, symbol.pattern.w), clean), 0.1)

    def test_leakage_interference(self) -> None:
        """Test that leakage adds interference to the shifted pilots too."""
        params = self.small
        coeffs, H, symbol = self.draw_link(params, q_star=2, rho=0.1)
        [rx] = apply_channel(symbol.x, [H], None)
        system = build_measurement(symbol.pattern.w, symbol.pilot_symbols, params)
        y_obs = extract_pilots(rx.y, receive_pattern(symbol.pattern.w, 2, params))
        self.assertGreater(ici_power_ratio(y_obs, system.A @ coeffs.dominant), 0.0)

    def test_observe(self) -> None:
        """Test attaching observations to a measurement system."""
        system = build_measurement(np.array([0, 8]), np.ones(2), self.small)
        self.assertIsNone(system.y_obs)
        observed = system.observe(np.array([1.0, 2.0]), 3)
        self.assertEqual(observed.q_star, 3)
        self.assertIs(observed.A, system.A)

    def test_invalid(self) -> None:
        """Test the validation of pilot symbols and the reference power."""
        with self.assertRaises(ValueError):
            build_measurement(np.array([0, 8]), np.ones(3), self.small)
        with self.assertRaises(ValueError):
            ici_power_ratio(np.ones(2), np.zeros(2))

    def test_guard_pilots(self) -> None:
        """Test the pilot budget of the guard-pilot scheme."""
        self.assertEqual(guard_pilot_count(40, 4), 360)
        self.assertEqual(guard_pilot_count(10, 0), 10)
