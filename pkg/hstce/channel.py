"""Complex-exponential basis expansion model (CE-BEM) of the doubly selective channel.

Conventions: the unitary DFT ``F[m, n] = exp(-2j*pi*m*n/K) / sqrt(K)``, ``F_L`` are the first L columns
of ``sqrt(K) * F``, subcarrier and tap indices are 0-based. ``P_s`` denotes the circular shift
permutation with ``P_s[m, n] = 1`` iff ``m = n + s (mod K)``.

In the frequency domain each basis function is exactly such a permutation, so the channel matrix is a
sum of Q+1 circularly shifted diagonals:

    H = sum_q P_{q - Q/2} diag(F_L c_q)
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from hstce.config import SystemParams

logger = logging.getLogger(__name__)


def _check_index(q: int, Q: int) -> None:
    if not 0 <= q <= Q:
        raise ValueError(f"Basis index must lie in [0, {Q}], got {q}.")


def dft_matrix(K: int) -> np.ndarray:
    """The unitary K-point DFT matrix."""
    return scipy.linalg.dft(K, scale="sqrtn")


def shift_matrix(K: int, shift: int) -> np.ndarray:
    """The permutation matrix ``P_shift`` with ones at ``(n + shift) mod K, n``."""
    return np.roll(np.eye(K), shift, axis=0)


def ce_basis(K: int, Q: int, q: int) -> np.ndarray:
    """Time-domain CE-BEM basis function ``b_q[k] = exp(2j*pi*k*(q - Q/2)/K)``.

    >>> np.allclose(ce_basis(8, 4, 2), np.ones(8))
    True
    """
    _check_index(q, Q)
    return np.exp(2j * np.pi * np.arange(K) * (q - Q // 2) / K)


def basis_freq(K: int, Q: int, q: int) -> np.ndarray:
    """Frequency-domain basis matrix ``F diag(b_q) F^H``.

    This equals the permutation ``P_{q - Q/2}`` up to rounding.
    """
    F = dft_matrix(K)
    return (F * ce_basis(K, Q, q)) @ F.conj().T


@dataclass(frozen=True)
class BemCoefficients:
    """Stacked CE-BEM coefficients of one receive antenna.

    Attributes:
        c: Coefficient vector of length L(Q+1) with ``c[q*L + l] = c(q, l)``.
        q_star: The dominant basis index.
        support: The dominant tap indices (sorted).
        rho: Fraction of power off the dominant index.
        L: Number of taps.
        Q: BEM order bound.
    """

    c: np.ndarray
    q_star: int
    support: np.ndarray
    rho: float
    L: int
    Q: int

    @property
    def blocks(self) -> np.ndarray:
        """The coefficients as a (Q+1) x L array, one row per basis index."""
        return self.c.reshape(self.Q + 1, self.L)

    @property
    def dominant(self) -> np.ndarray:
        """The coefficient block ``c*`` at the dominant index."""
        return self.blocks[self.q_star]


@dataclass(frozen=True)
class ChannelMatrix:
    """Banded frequency-domain channel of one receive antenna.

    The matrix is kept as its Q+1 shifted diagonals; ``H`` materializes the dense K x K matrix.

    Attributes:
        blocks: (Q+1) x K array, row q holds the diagonal of the block shifted by q - Q/2.
        Q: BEM order bound.
    """

    blocks: np.ndarray
    Q: int
    _dense: list = field(default_factory=list, repr=False, compare=False)

    @property
    def K(self) -> int:
        return int(self.blocks.shape[1])

    def shift(self, q: int) -> int:
        return q - self.Q // 2

    @property
    def H(self) -> np.ndarray:
        if not self._dense:
            H = np.zeros((self.K, self.K), dtype=complex)
            for q, gains in enumerate(self.blocks):
                if np.any(gains):
                    H += np.roll(np.diag(gains), self.shift(q), axis=0)
            self._dense.append(H)
        return self._dense[0]

    @property
    def dominant_index(self) -> int:
        """The basis index carrying the most power."""
        return int(np.argmax(np.sum(np.abs(self.blocks) ** 2, axis=1)))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Compute ``H @ x`` from the shifted diagonals."""
        if x.shape != (self.K,):
            raise ValueError(f"Expected a vector of length {self.K}, got shape {x.shape}.")
        y = np.zeros(self.K, dtype=complex)
        for q, gains in enumerate(self.blocks):
            if np.any(gains):
                y += np.roll(gains * x, self.shift(q))
        return y


def synthesize_coefficients(
    params: SystemParams, q_star: int, rho: float, rng: np.random.Generator
) -> BemCoefficients:
    """Draw an S-sparse CE-BEM coefficient vector.

    The S taps are drawn uniformly without replacement. The dominant block carries unit-variance
    circular Gaussian coefficients on the support; with ``rho > 0`` every other basis index receives
    independent Gaussian coefficients on the same support, scaled so they hold the fraction ``rho`` of
    the total power. The whole vector is normalized to unit energy.

    Args:
        params: The system parameters.
        q_star: The dominant basis index.
        rho: Fraction of power off the dominant index, in [0, 1).
        rng: The random generator.

    Raises:
        ValueError: If ``rho`` lies outside [0, 1) or ``q_star`` outside [0, Q].
    """
    if not 0 <= rho < 1:
        raise ValueError(f"Leakage must lie in [0, 1), got {rho}.")
    _check_index(q_star, params.Q)
    L, Q = params.L, params.Q

    support = np.sort(rng.choice(L, size=params.S, replace=False))
    blocks = np.zeros((Q + 1, L), dtype=complex)

    def gaussian() -> np.ndarray:
        return (rng.standard_normal(params.S) + 1j * rng.standard_normal(params.S)) / np.sqrt(2)

    blocks[q_star, support] = gaussian()
    dominant_power = np.sum(np.abs(blocks[q_star]) ** 2)

    others = [q for q in range(Q + 1) if q != q_star]
    if rho > 0 and others:
        for q in others:
            blocks[q, support] = gaussian()
        leak_power = np.sum(np.abs(blocks[others]) ** 2)
        blocks[others] *= np.sqrt(rho / (1 - rho) * dominant_power / leak_power)

    blocks /= np.linalg.norm(blocks)
    return BemCoefficients(blocks.reshape(-1), q_star, support, rho, L, Q)


def coefficients_from_blocks(blocks: np.ndarray, q_star: int, rho: float = 0.0) -> BemCoefficients:
    """Wrap a (Q+1) x L coefficient array as ``BemCoefficients``."""
    blocks = np.asarray(blocks, dtype=complex)
    Q, L = blocks.shape[0] - 1, blocks.shape[1]
    support = np.flatnonzero(np.any(blocks != 0, axis=0))
    return BemCoefficients(blocks.reshape(-1), q_star, support, rho, L, Q)


def channel_matrix(coeffs: BemCoefficients, params: SystemParams) -> ChannelMatrix:
    """Build the frequency-domain channel ``H = sum_q P_{q-Q/2} diag(F_L c_q)``.

    Raises:
        ValueError: If the coefficient vector does not have length L(Q+1).
    """
    expected = params.L * (params.Q + 1)
    if coeffs.c.shape != (expected,):
        raise ValueError(f"Expected {expected} coefficients, got shape {coeffs.c.shape}.")
    # F_L @ c_q is the K-point FFT of the zero-padded taps
    blocks = np.fft.fft(coeffs.c.reshape(params.Q + 1, params.L), n=params.K, axis=1)
    return ChannelMatrix(blocks, params.Q)


def time_domain_taps(coeffs: BemCoefficients, params: SystemParams) -> np.ndarray:
    """Time-varying taps ``h(k, l) = sum_q b_q[k] c(q, l)`` as a K x L array."""
    basis = np.stack([ce_basis(params.K, params.Q, q) for q in range(params.Q + 1)], axis=1)
    return basis @ coeffs.c.reshape(params.Q + 1, params.L)


def time_domain_matrix(taps: np.ndarray) -> np.ndarray:
    """The K x K time-domain channel with ``H_time[k, (k - l) mod K] = h(k, l)``."""
    K, L = taps.shape
    H_time = np.zeros((K, K), dtype=complex)
    rows = np.arange(K)
    for lag in range(L):
        H_time[rows, (rows - lag) % K] += taps[:, lag]
    return H_time


def ici_split(H: ChannelMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Split the dense channel into its ICI-free diagonal part and the ICI part."""
    dense = H.H
    free = np.diag(np.diag(dense))
    return free, dense - free


def sparsity_report(coeffs: BemCoefficients, gamma: float) -> list[tuple[int, int]]:
    """The (q, l) entries whose power is at least ``gamma`` times the peak coefficient power.

    >>> c = coefficients_from_blocks(np.array([[0, 0], [1, 0.05], [0, 0.5]]), q_star=1)
    >>> sparsity_report(c, 0.01)
    [(1, 0), (2, 1)]
    """
    power = np.abs(coeffs.blocks) ** 2
    peak = power.max()
    if peak == 0:
        return []
    qs, ls = np.nonzero(power >= gamma * peak)
    return [(int(q), int(tap)) for q, tap in zip(qs, ls)]
