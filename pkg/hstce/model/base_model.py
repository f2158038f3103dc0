"""A base class for channel estimators and the quantities they produce."""

from abc import ABC
from dataclasses import dataclass

import numpy as np

from hstce.channel import ChannelMatrix
from hstce.config import SystemParams
from hstce.ici import MeasurementSystem


@dataclass(frozen=True)
class EstimateResult:
    """Result of a sparse recovery.

    Attributes:
        c_hat: The estimated coefficient vector of length L.
        support: The recovered tap indices, ascending.
        residual_norm: The final residual ``||y - A c_hat||``.
        iterations: The number of solver iterations.
        converged: False if the solver stopped early (singular active set, iteration cap).
    """

    c_hat: np.ndarray
    support: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool = True


class ChannelEstimator(ABC):
    """A base class for estimators of the dominant CE-BEM coefficient block."""

    name: str = "base"

    def __call__(self, system: MeasurementSystem, noise_var: float = 0.0) -> EstimateResult:
        """Estimate the coefficients from the pilot observations held by ``system``.

        Args:
            system: The sensing matrix with its pilot observations.
            noise_var: The noise variance per complex observation, 0 for a noiseless link.

        Returns:
            The estimate of the dominant coefficient block.
        """
        raise NotImplementedError


def reconstruct_channel(c_hat: np.ndarray, q_star: int, params: SystemParams) -> ChannelMatrix:
    """Rebuild the permuted-diagonal channel ``P_{q*-Q/2} diag(F_L c_hat)``.

    Raises:
        ValueError: If ``c_hat`` does not have length L.
    """
    c_hat = np.asarray(c_hat)
    if c_hat.shape != (params.L,):
        raise ValueError(f"Expected {params.L} coefficients, got shape {c_hat.shape}.")
    blocks = np.zeros((params.Q + 1, params.K), dtype=complex)
    blocks[q_star] = np.fft.fft(c_hat, n=params.K)
    return ChannelMatrix(blocks, params.Q)


def nmse(c_hat: np.ndarray, c_true: np.ndarray) -> float:
    """Normalized squared error ``||c_hat - c_true||^2 / ||c_true||^2``.

    >>> nmse(np.zeros(3), np.array([1.0, 0.0, 1.0]))
    1.0

    Raises:
        ValueError: If ``c_true`` is zero.
    """
    reference = float(np.sum(np.abs(c_true) ** 2))
    if reference == 0:
        raise ValueError("Normalized error is undefined for an all-zero reference.")
    return float(np.sum(np.abs(np.asarray(c_hat) - c_true) ** 2) / reference)
