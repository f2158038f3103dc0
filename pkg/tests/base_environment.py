"""Base environment for setting up the test environment."""

import unittest
from abc import ABC

import numpy as np

from hstce.channel import BemCoefficients, ChannelMatrix, channel_matrix, synthesize_coefficients
from hstce.config import SystemParams
from hstce.ici import PilotPattern
from hstce.phy import OfdmSymbol, random_symbol
from hstce.pilots import algorithm1, equidistant_pattern


class TestEnvironment(unittest.TestCase, ABC):
    """Class for setting up the test environment."""

    def setUp(self) -> None:
        """Set up the test environment."""
        # Small link for fast checks; Q = 4 follows from the default radio parameters
        self.small = SystemParams(K=64, P=16, L=16, S=3)

        # The full-size link
        self.paper = SystemParams()

        self.rng = np.random.default_rng(1234)

    def draw_link(
        self, params: SystemParams, q_star: int, rho: float = 0.0, seed: int = 0
    ) -> tuple[BemCoefficients, ChannelMatrix, OfdmSymbol]:
        """Draw coefficients, their channel and a random symbol on the equidistant pattern."""
        rng = np.random.default_rng(seed)
        coeffs = synthesize_coefficients(params, q_star, rho, rng)
        symbol = random_symbol(PilotPattern(equidistant_pattern(params)), params, rng)
        return coeffs, channel_matrix(coeffs, params), symbol

    def designed_pattern(self, params: SystemParams, seed: int = 0) -> np.ndarray:
        """A pattern designed from the equidistant start with 200 iterations."""
        iterations = 200 - 200 % params.P
        return algorithm1(equidistant_pattern(params), params, rng=np.random.default_rng(seed),
                          iterations=iterations)
