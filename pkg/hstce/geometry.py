"""Train geometry: antenna positions, Doppler shifts and the dominant basis index.

Positions are measured along the railway from point A (where the train enters the cell) over the
broadside point B (alpha = D) to point C (alpha = 2D).

>>> from hstce.config import SystemParams
>>> params = SystemParams()
>>> dominant_index_from_position(0.0, params), dominant_index_from_position(params.D, params)
(4, 2)
"""

import math
from dataclasses import dataclass

import numpy as np

from hstce.config import SystemParams

# relative slack for |f_r| <= f_max comparisons
_DOPPLER_TOL = 1e-12


@dataclass(frozen=True)
class AntennaPosition:
    """Position of receive antenna ``antenna_id`` (1-based) along the railway."""

    alpha: float
    antenna_id: int


@dataclass(frozen=True)
class DopplerState:
    """Doppler shift of an antenna and the dominant CE-BEM index it selects."""

    f_r: float
    q_star: int


def _check_position(alpha: float, params: SystemParams) -> None:
    if not 0.0 <= alpha <= 2 * params.D:
        raise ValueError(f"Antenna position must lie in [0, {2 * params.D:.3f}] m, got {alpha}.")


def _cos_theta(alpha: float, params: SystemParams) -> float:
    offset = params.D - alpha
    norm = math.hypot(offset, params.d_min)
    return offset / norm if norm > 0 else 0.0


def doppler_at_position(alpha: float, params: SystemParams) -> float:
    """Doppler shift in Hz seen by an antenna at ``alpha``.

    Positive while approaching the broadside point B, negative after it.

    Raises:
        ValueError: If ``alpha`` lies outside [0, 2D].
    """
    _check_position(alpha, params)
    return params.f_max * _cos_theta(alpha, params)


def _index(normalized_shift: float, Q: int, negative: bool) -> int:
    rounded = math.floor(normalized_shift) if negative else math.ceil(normalized_shift)
    return int(min(max(rounded + Q // 2, 0), Q))


def dominant_index_from_doppler(f_r: float, params: SystemParams) -> int:
    """Dominant basis index for a Doppler shift.

    Uses the ceiling branch on [0, f_max] and the floor branch on [-f_max, 0).

    Raises:
        ValueError: If ``|f_r|`` exceeds f_max.
    """
    if abs(f_r) > params.f_max * (1 + _DOPPLER_TOL):
        raise ValueError(f"Doppler shift {f_r} Hz exceeds the maximum {params.f_max} Hz.")
    return _index(params.T * f_r, params.Q, f_r < 0)


def dominant_index_from_position(alpha: float, params: SystemParams) -> int:
    """Dominant basis index for an antenna at ``alpha``.

    Ceiling branch on [0, D], floor branch on (D, 2D].
    """
    _check_position(alpha, params)
    # T * f_r rather than F_norm * cos so the result agrees bit-for-bit with the Doppler route
    f_r = params.f_max * _cos_theta(alpha, params)
    return _index(params.T * f_r, params.Q, alpha > params.D and f_r < 0)


def doppler_state(alpha: float, params: SystemParams) -> DopplerState:
    """Doppler shift and dominant index of an antenna at ``alpha``."""
    f_r = doppler_at_position(alpha, params)
    return DopplerState(f_r, dominant_index_from_doppler(f_r, params))


def antenna_positions(train_front_alpha: float, params: SystemParams) -> list[AntennaPosition]:
    """Positions of the R roof antennas, evenly spaced behind the front antenna.

    Args:
        train_front_alpha: Position of the front antenna (antenna 1).
        params: The system parameters.

    Returns:
        The antenna positions, front first.

    Raises:
        ValueError: If the front lies beyond point C or the rear antenna lies before point A.
    """
    if train_front_alpha > 2 * params.D:
        raise ValueError(f"Front antenna at {train_front_alpha} m lies beyond point C.")
    if params.R == 1:
        offsets = np.zeros(1)
    else:
        offsets = np.arange(params.R) * (params.train_length / (params.R - 1))
    alphas = train_front_alpha - offsets
    if alphas[-1] < 0:
        raise ValueError(f"Rear antenna at {alphas[-1]} m lies before point A.")
    return [AntennaPosition(float(a), r + 1) for r, a in enumerate(alphas)]
