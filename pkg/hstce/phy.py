"""Frequency-domain SIMO-OFDM link: symbol assembly, channel, noise, combining and demapping."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from hstce.channel import BemCoefficients, ChannelMatrix, time_domain_taps
from hstce.config import SystemParams
from hstce.ici import PilotPattern

logger = logging.getLogger(__name__)

PILOT_AMPLITUDE = 1.0


@dataclass(frozen=True)
class OfdmSymbol:
    """A transmitted OFDM symbol.

    Attributes:
        x: The K frequency-domain samples.
        pattern: The pilot pattern.
        data_indices: The data subcarriers (complement of the pilots), ascending.
        bits: The source bits carried on the data subcarriers.
    """

    x: np.ndarray
    pattern: PilotPattern
    data_indices: np.ndarray
    bits: np.ndarray

    @property
    def pilot_symbols(self) -> np.ndarray:
        return self.x[self.pattern.w]

    def pilots_only(self) -> np.ndarray:
        """The symbol with all data subcarriers set to zero."""
        x = np.zeros_like(self.x)
        x[self.pattern.w] = self.x[self.pattern.w]
        return x


@dataclass(frozen=True)
class ReceivedSymbol:
    """The frequency-domain samples of one receive antenna.

    Attributes:
        y: The K received samples.
        snr_db: The SNR in dB, or None for a noiseless link.
        noise_var: The noise variance per complex sample.
    """

    y: np.ndarray
    snr_db: float | None
    noise_var: float


def noise_variance(snr_db: float | None) -> float:
    """Noise variance per complex sample for unit-power signaling."""
    return 0.0 if snr_db is None else float(PILOT_AMPLITUDE / 10 ** (snr_db / 10))


def awgn(K: int, snr_db: float | None, rng: np.random.Generator) -> np.ndarray:
    """Draw K circular complex Gaussian noise samples at the given SNR."""
    var = noise_variance(snr_db)
    if var == 0:
        return np.zeros(K, dtype=complex)
    return np.sqrt(var / 2) * (rng.standard_normal(K) + 1j * rng.standard_normal(K))


def qam4_modulate(bits: np.ndarray | Sequence[int]) -> np.ndarray:
    """Map bit pairs to unit-power Gray-coded 4-QAM symbols.

    >>> qam4_modulate([0, 0, 1, 1])
    array([ 0.70710678+0.70710678j, -0.70710678-0.70710678j])

    Raises:
        ValueError: If the number of bits is odd.
    """
    bits = np.asarray(bits, dtype=int)
    if bits.size % 2:
        raise ValueError(f"4-QAM needs an even number of bits, got {bits.size}.")
    pairs = bits.reshape(-1, 2)
    real = np.where(pairs[:, 1] == 0, 1.0, -1.0)
    imag = np.where(pairs[:, 0] == 0, 1.0, -1.0)
    return (real + 1j * imag) / np.sqrt(2)


def qam4_demodulate(symbols: np.ndarray) -> np.ndarray:
    """Hard-decision demapping of 4-QAM symbols; the inverse of ``qam4_modulate``.

    A symbol exactly at the origin demaps to the bit pair (0, 0).
    """
    symbols = np.asarray(symbols)
    bits = np.empty((symbols.size, 2), dtype=int)
    bits[:, 0] = symbols.imag < 0
    bits[:, 1] = symbols.real < 0
    return bits.reshape(-1)


def assemble_symbol(pattern: PilotPattern, data_bits: np.ndarray, params: SystemParams) -> OfdmSymbol:
    """Place constant pilots on the pattern and 4-QAM data on the remaining subcarriers.

    Raises:
        ValueError: If the pattern is invalid for K subcarriers or the bit count is not 2(K - P).
    """
    w = pattern.w
    if len(np.unique(w)) != len(w):
        raise ValueError("Pilot indices must be distinct.")
    if np.any((w < 0) | (w >= params.K)):
        raise ValueError(f"Pilot indices must lie in [0, {params.K}).")
    data_indices = np.setdiff1d(np.arange(params.K), w)
    data_bits = np.asarray(data_bits, dtype=int)
    if data_bits.size != 2 * data_indices.size:
        raise ValueError(f"Expected {2 * data_indices.size} data bits, got {data_bits.size}.")

    x = np.zeros(params.K, dtype=complex)
    x[w] = np.sqrt(PILOT_AMPLITUDE)
    x[data_indices] = qam4_modulate(data_bits)
    return OfdmSymbol(x, pattern, data_indices, data_bits)


def random_symbol(pattern: PilotPattern, params: SystemParams, rng: np.random.Generator) -> OfdmSymbol:
    """Assemble a symbol carrying uniformly random data bits."""
    n_bits = 2 * (params.K - len(pattern.w))
    return assemble_symbol(pattern, rng.integers(0, 2, size=n_bits), params)


def apply_channel(
    x: np.ndarray,
    channels: Sequence[ChannelMatrix],
    snr_db: float | None,
    rng: np.random.Generator | None = None,
    noise: Sequence[np.ndarray] | None = None,
) -> list[ReceivedSymbol]:
    """Pass ``x`` through every antenna's channel and add white Gaussian noise.

    Args:
        x: The transmitted frequency-domain symbol.
        channels: One channel matrix per receive antenna.
        snr_db: The SNR in dB, or None for a noiseless link.
        rng: The random generator, needed unless the link is noiseless or ``noise`` is given.
        noise: Pre-drawn noise vectors, one per antenna. Overrides drawing from ``rng``.

    Raises:
        ValueError: If a channel does not match the symbol length.
    """
    received = []
    for r, H in enumerate(channels):
        if H.K != x.shape[0]:
            raise ValueError(f"Channel of antenna {r + 1} is {H.K}x{H.K}, symbol has length {x.shape[0]}.")
        if noise is not None:
            n = noise[r]
        elif snr_db is None:
            n = np.zeros(H.K, dtype=complex)
        else:
            if rng is None:
                raise ValueError("A random generator is required for a noisy link.")
            n = awgn(H.K, snr_db, rng)
        received.append(ReceivedSymbol(H.apply(x) + n, snr_db, noise_variance(snr_db)))
    return received


def time_domain_loopback(
    x: np.ndarray, coeffs: BemCoefficients, params: SystemParams, cp_length: int | None = None
) -> ReceivedSymbol:
    """Noiseless link simulated sample by sample in the time domain.

    IDFT, cyclic prefix insertion, time-varying convolution with ``h(k, l)``, prefix removal and DFT.
    Serves as an independent check of the frequency-domain model.

    Raises:
        ValueError: If the cyclic prefix is shorter than L - 1.
    """
    n_cp = params.n_cp if cp_length is None else cp_length
    if n_cp < params.L - 1:
        raise ValueError(f"Cyclic prefix must be at least L - 1 = {params.L - 1}, got {n_cp}.")
    K = params.K
    s = np.fft.ifft(x) * np.sqrt(K)
    tx = np.concatenate([s[K - n_cp :], s]) if n_cp else s

    taps = time_domain_taps(coeffs, params)
    r = np.zeros(K, dtype=complex)
    for lag in range(params.L):
        r += taps[:, lag] * tx[n_cp - lag : n_cp - lag + K]
    return ReceivedSymbol(np.fft.fft(r) / np.sqrt(K), None, 0.0)


def zf_combine(
    received: Sequence[ReceivedSymbol | np.ndarray], estimates: Sequence[ChannelMatrix]
) -> tuple[np.ndarray, np.ndarray]:
    """Zero-forcing combining of permuted-diagonal channel estimates across antennas.

    For every transmit subcarrier k the antennas contribute
    ``conj(H_r(k)) y_r(v_r(k)) / sum_r |H_r(k)|^2`` where ``H_r(k)`` is the gain of the dominant
    shifted diagonal and ``v_r(k)`` the subcarrier it lands on.

    Args:
        received: The received symbols (or plain sample vectors), one per antenna.
        estimates: The estimated channels, one per antenna.

    Returns:
        The equalized K symbols and a boolean erasure mask (subcarriers without any gain). Erased
        subcarriers are set to 0.
    """
    if len(received) != len(estimates):
        raise ValueError(f"Got {len(received)} received symbols for {len(estimates)} channel estimates.")
    K = estimates[0].K
    numerator = np.zeros(K, dtype=complex)
    denominator = np.zeros(K)
    for rx, H in zip(received, estimates):
        y = rx.y if isinstance(rx, ReceivedSymbol) else np.asarray(rx)
        q = H.dominant_index
        gains = H.blocks[q]
        numerator += gains.conj() * np.roll(y, -H.shift(q))
        denominator += np.abs(gains) ** 2

    erased = denominator == 0
    x_hat = np.zeros(K, dtype=complex)
    x_hat[~erased] = numerator[~erased] / denominator[~erased]
    if np.any(erased):
        logger.warning("Zero-forcing erased %d subcarrier(s) without channel gain", int(erased.sum()))
    return x_hat, erased


def ber(bits_true: np.ndarray, bits_est: np.ndarray) -> float:
    """Fraction of differing bits.

    >>> ber(np.array([0, 1, 1, 0]), np.array([0, 1, 0, 0]))
    0.25
    """
    bits_true, bits_est = np.asarray(bits_true), np.asarray(bits_est)
    if bits_true.shape != bits_est.shape:
        raise ValueError(f"Bit vectors differ in length: {bits_true.size} vs {bits_est.size}.")
    if bits_true.size == 0:
        return 0.0
    return float(np.count_nonzero(bits_true != bits_est) / bits_true.size)
