"""This module contains an estimator returning known coefficients, used as the perfect CSI reference."""

import numpy as np

from hstce.ici import MeasurementSystem
from hstce.model.base_model import ChannelEstimator, EstimateResult


class OracleEstimator(ChannelEstimator):
    """This estimator ignores the observations and returns the coefficients it was given.

    Args:
        c_true: The true dominant coefficient block.
    """

    name = "perfect"

    def __init__(self, c_true: np.ndarray):
        self.c_true = np.asarray(c_true, dtype=complex)

    def __call__(self, system: MeasurementSystem, noise_var: float = 0.0) -> EstimateResult:
        residual = 0.0
        if system.y_obs is not None:
            residual = float(np.linalg.norm(system.y_obs - system.A @ self.c_true))
        return EstimateResult(self.c_true.copy(), np.flatnonzero(self.c_true), residual, 0)
