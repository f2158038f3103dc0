"""Position-based ICI elimination.

With a CE-BEM channel whose power sits at the dominant index q*, the pilot sent on subcarrier ``w_p``
arrives on ``(w_p + q* - Q/2) mod K`` without interference from the data subcarriers. Gathering the
received samples at these shifted indices yields ``y_obs = S(w, :) c* + noise`` with the sensing
matrix ``S(w, :) = diag(x(w)) F_L(w, :)``, which does not depend on q*.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from hstce.config import SystemParams


@dataclass(frozen=True, eq=False)
class PilotPattern:
    """Transmit pilot subcarriers and the receive patterns of the individual antennas.

    Args:
        w: The P distinct transmit pilot indices.
        receive: Receive patterns ``v_r``, one per antenna, if computed.
    """

    w: np.ndarray
    receive: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=int)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("A pilot pattern needs at least one index.")
        if len(np.unique(w)) != w.size:
            raise ValueError("Pilot indices must be distinct.")
        if np.any(w < 0):
            raise ValueError("Pilot indices must be non-negative.")
        object.__setattr__(self, "w", w)

    @property
    def P(self) -> int:
        return int(self.w.size)

    def validate(self, K: int) -> None:
        if np.any(self.w >= K):
            raise ValueError(f"Pilot indices must lie in [0, {K}).")

    def with_receive(self, q_stars: Sequence[int], params: SystemParams) -> "PilotPattern":
        """Attach the receive patterns for antennas with the given dominant indices."""
        return PilotPattern(self.w, tuple(receive_pattern(self.w, q, params) for q in q_stars))


@dataclass(frozen=True)
class MeasurementSystem:
    """Linear model ``y_obs = A c* + noise`` of one antenna's ICI-free pilots.

    Attributes:
        A: The P x L sensing matrix ``diag(x(w)) F_L(w, :)``.
        y_obs: The P pilot observations, if already gathered.
        q_star: The dominant index used to gather the observations.
    """

    A: np.ndarray
    y_obs: np.ndarray | None = None
    q_star: int | None = None

    def observe(self, y_obs: np.ndarray, q_star: int) -> "MeasurementSystem":
        return MeasurementSystem(self.A, np.asarray(y_obs), q_star)


def receive_pattern(w: np.ndarray, q_star: int, params: SystemParams) -> np.ndarray:
    """Receive pilot indices ``v_r = (w + q* - Q/2) mod K``.

    >>> from hstce.config import SystemParams
    >>> receive_pattern(np.array([0]), 0, SystemParams())
    array([510])
    """
    if not 0 <= q_star <= params.Q:
        raise ValueError(f"Dominant index must lie in [0, {params.Q}], got {q_star}.")
    w = np.asarray(w, dtype=int)
    if np.any((w < 0) | (w >= params.K)):
        raise ValueError(f"Pilot indices must lie in [0, {params.K}).")
    return (w + q_star - params.Q // 2) % params.K


def extract_pilots(y: np.ndarray, v_r: np.ndarray) -> np.ndarray:
    """Gather the received samples on the receive pilot pattern."""
    return np.asarray(y)[np.asarray(v_r, dtype=int)]


def naive_extract(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gather the received samples on the unshifted transmit pattern (no ICI elimination)."""
    return extract_pilots(y, w)


def build_measurement(w: np.ndarray, pilot_symbols: np.ndarray, params: SystemParams) -> MeasurementSystem:
    """Sensing matrix ``A[p, l] = x(w_p) exp(-2j*pi*w_p*l/K)``.

    Raises:
        ValueError: If the number of pilot symbols differs from the number of pilot indices.
    """
    w = np.asarray(w, dtype=int)
    pilot_symbols = np.asarray(pilot_symbols)
    if pilot_symbols.shape != w.shape:
        raise ValueError(f"Got {pilot_symbols.size} pilot symbols for {w.size} pilot indices.")
    return MeasurementSystem(pilot_symbols[:, None] * partial_fourier(w, params.K, params.L))


def partial_fourier(w: np.ndarray, K: int, L: int) -> np.ndarray:
    """Rows ``w`` of ``F_L``, the first L columns of the unnormalized K-point DFT matrix."""
    return np.exp(-2j * np.pi * np.outer(np.asarray(w), np.arange(L)) / K)


def ici_power_ratio(observed: np.ndarray, clean: np.ndarray) -> float:
    """Interference-to-signal power ``||observed - clean||^2 / ||clean||^2``."""
    clean_power = float(np.sum(np.abs(clean) ** 2))
    if clean_power == 0:
        raise ValueError("Reference pilot observations carry no power.")
    return float(np.sum(np.abs(observed - clean) ** 2) / clean_power)


def guard_pilot_count(P: int, Q: int) -> int:
    """Total pilots of a guard-pilot scheme with P effective pilots, each guarded by Q on both sides.

    >>> guard_pilot_count(27, 4)
    243
    """
    return (2 * Q + 1) * P
