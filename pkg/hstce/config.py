"""System parameters of the high-speed-train SIMO-OFDM link and their configuration documents.

The configuration document is YAML with the mappings ``system``, ``radio``, ``geometry`` and ``sim``.
Every key is optional; missing keys take the defaults below.

>>> params = load_config("")
>>> params.K, params.P, params.L, params.Q
(512, 40, 64, 4)
>>> round(params.f_max)
1088
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

logger = logging.getLogger(__name__)

C_LIGHT = 3.0e8


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration documents."""


@dataclass(frozen=True)
class SystemParams:
    """Physical and OFDM constants of the link, with the derived Doppler quantities.

    Args:
        K: Number of subcarriers.
        P: Number of pilot subcarriers.
        L: Number of channel taps.
        S: Number of dominant taps.
        f_c: Carrier frequency in Hz.
        bandwidth: Signal bandwidth in Hz.
        T: Packet duration in seconds.
        speed_kmh: Train speed in km/h.
        d_max: Maximum distance between the base station and the railway in m.
        d_min: Minimum distance between the base station and the railway in m.
        bs_range: Cover range of the base station in m.
        train_length: Distance between the first and the last roof antenna in m.
        R: Number of receive antennas.
        gamma: Dominance threshold relative to the peak coefficient power.
        cp_length: Cyclic prefix length in samples. Defaults to L.

    Attributes:
        v: Train speed in m/s.
        f_max: Maximum Doppler shift in Hz.
        Q: BEM order bound, always even.
        F_norm: Normalized maximum Doppler shift T * f_max.
        D: Half of the railway span inside the cell in m.
        n_cp: The effective cyclic prefix length.
    """

    K: int = 512
    P: int = 40
    L: int = 64
    S: int = 5
    f_c: float = 2.35e9
    bandwidth: float = 5e6
    T: float = 1.2e-3
    speed_kmh: float = 500.0
    d_max: float = 1000.0
    d_min: float = 40.0
    bs_range: float = 1000.0
    train_length: float = 200.0
    R: int = 2
    gamma: float = 0.01
    cp_length: int | None = None

    v: float = field(init=False)
    f_max: float = field(init=False)
    Q: int = field(init=False)
    F_norm: float = field(init=False)
    D: float = field(init=False)
    n_cp: int = field(init=False)

    def __post_init__(self) -> None:
        self._validate()
        v = self.speed_kmh / 3.6
        f_max = v / C_LIGHT * self.f_c
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "f_max", f_max)
        object.__setattr__(self, "Q", 2 * math.ceil(f_max * self.T))
        object.__setattr__(self, "F_norm", self.T * f_max)
        object.__setattr__(self, "D", math.sqrt(self.d_max**2 - self.d_min**2))
        object.__setattr__(self, "n_cp", self.L if self.cp_length is None else self.cp_length)

    def _validate(self) -> None:
        if not 0 < self.P < self.K:
            raise ValueError(f"Pilot count must satisfy 0 < P < K, got P={self.P}, K={self.K}.")
        if not 0 < self.S <= self.L:
            raise ValueError(f"Dominant tap count must satisfy 0 < S <= L, got S={self.S}, L={self.L}.")
        if self.L >= self.K:
            raise ValueError(f"Tap count must satisfy L < K, got L={self.L}, K={self.K}.")
        if not 0 <= self.d_min < self.d_max:
            raise ValueError(f"Distances must satisfy 0 <= d_min < d_max, got {self.d_min}, {self.d_max}.")
        if self.speed_kmh < 0:
            raise ValueError(f"Train speed must be non-negative, got {self.speed_kmh} km/h.")
        if self.f_c <= 0 or self.T <= 0 or self.bandwidth <= 0:
            raise ValueError("Carrier frequency, bandwidth and packet duration must be positive.")
        if self.R < 1:
            raise ValueError(f"At least one receive antenna is required, got R={self.R}.")
        if self.train_length < 0:
            raise ValueError(f"Train length must be non-negative, got {self.train_length}.")
        if not 0 < self.gamma < 1:
            raise ValueError(f"Dominance threshold must lie in (0, 1), got {self.gamma}.")
        if self.cp_length is not None and self.cp_length < self.L - 1:
            raise ValueError(f"Cyclic prefix must be at least L - 1 = {self.L - 1}, got {self.cp_length}.")

    def replace(self, **changes: Any) -> "SystemParams":
        """Return a copy with the given raw fields changed and everything re-derived."""
        return dataclasses.replace(self, **changes)

    def raw_fields(self) -> dict[str, Any]:
        """The raw (non-derived) fields as a dictionary."""
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.init}

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def derive(params: SystemParams) -> SystemParams:
    """Recompute every derived field of ``params``.

    Derived fields are always consistent on a constructed instance, so this is idempotent.
    """
    return dataclasses.replace(params)


def default_snr_grid() -> list[float]:
    return [float(s) for s in range(0, 41, 5)]


@dataclass(frozen=True)
class SimSettings:
    """Monte Carlo settings taken from the ``sim`` section.

    Args:
        trials: Number of trials per point.
        seed: Master seed of the run.
        snr_db: SNR grid in dB.
        leakage: Fraction of channel power off the dominant basis index.
        position_m: Reported train position (front antenna) in m. Defaults to the train length so the
            rear antenna sits at point A.
        positions_m: Position grid for the position sweep. Defaults to 0:100:2D.
        delta: Average coherence threshold.
        iterations: Iteration budget of the pilot pattern design.
        candidates: Number of random candidates of the exhaustive search baseline.
        workers: Number of worker threads for the trials.
        estimators: Estimators to evaluate.
        designs: Pilot pattern designs to evaluate.
    """

    trials: int = 200
    seed: int = 0
    snr_db: tuple[float, ...] = field(default_factory=lambda: tuple(default_snr_grid()))
    leakage: float = 0.0
    position_m: float | None = None
    positions_m: tuple[float, ...] | None = None
    delta: float = 0.2
    iterations: int = 200
    candidates: int = 200
    workers: int = 1
    estimators: tuple[str, ...] = ("ls", "omp", "bp")
    designs: tuple[str, ...] = ("equidistant", "exhaustive", "alg1")

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"At least one trial is required, got {self.trials}.")
        if len(self.snr_db) == 0:
            raise ValueError("The SNR grid must not be empty.")
        if not 0 <= self.leakage < 1:
            raise ValueError(f"Leakage must lie in [0, 1), got {self.leakage}.")
        if not 0 < self.delta < 1:
            raise ValueError(f"Coherence threshold must lie in (0, 1), got {self.delta}.")
        if self.iterations < 0 or self.candidates < 1 or self.workers < 1:
            raise ValueError("Iterations must be >= 0, candidates and workers >= 1.")

    def resolved_position(self, params: SystemParams) -> float:
        return self.position_m if self.position_m is not None else params.train_length

    def resolved_positions(self, params: SystemParams) -> list[float]:
        if self.positions_m is not None:
            return list(self.positions_m)
        return [float(a) for a in np.arange(0.0, 2 * params.D, 100.0)] + [2 * params.D]


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved configuration document."""

    params: SystemParams = field(default_factory=SystemParams)
    sim: SimSettings = field(default_factory=SimSettings)

    def to_dict(self) -> dict[str, Any]:
        sim = dataclasses.asdict(self.sim)
        sim["position_m"] = self.sim.resolved_position(self.params)
        sim["positions_m"] = self.sim.resolved_positions(self.params)
        return {"system": self.params.to_dict(), "sim": sim}


# document key -> SystemParams field, per section
_PARAM_KEYS: dict[str, dict[str, str]] = {
    "system": {"k": "K", "p": "P", "l": "L", "s": "S", "gamma": "gamma"},
    "radio": {
        "carrier_hz": "f_c",
        "bandwidth_hz": "bandwidth",
        "packet_duration_s": "T",
        "cp_length": "cp_length",
    },
    "geometry": {
        "d_max_m": "d_max",
        "d_min_m": "d_min",
        "bs_range_m": "bs_range",
        "train_length_m": "train_length",
        "speed_kmh": "speed_kmh",
        "antennas": "R",
    },
}

_SIM_KEYS = {
    "trials": "trials",
    "seed": "seed",
    "snr_db": "snr_db",
    "leakage": "leakage",
    "position_m": "position_m",
    "positions_m": "positions_m",
    "delta": "delta",
    "iterations": "iterations",
    "candidates": "candidates",
    "workers": "workers",
    "estimators": "estimators",
    "designs": "designs",
}

_INT_FIELDS = {"K", "P", "L", "S", "R", "cp_length", "trials", "seed", "iterations", "candidates", "workers"}
_TUPLE_FIELDS = {"snr_db", "positions_m", "estimators", "designs"}


def _parse_document(text: str) -> dict[str, Any]:
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        line = mark.line + 1 if mark is not None else "?"
        raise ConfigError(f"Configuration parse error at line {line}: {e.problem}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Configuration parse error: {e}") from e

    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("Configuration document must be a mapping of sections.")
    return doc


def _convert(name: str, value: Any) -> Any:
    if name in _TUPLE_FIELDS:
        items = value if isinstance(value, list | tuple) else [value]
        if name in ("estimators", "designs"):
            return tuple(str(item).lower() for item in items)
        return tuple(float(item) for item in items)
    if value is None:
        return None
    if name in _INT_FIELDS:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"Key '{name}' expects an integer, got {value}.")
        return int(value)
    return float(value)


def _section(doc: dict[str, Any], name: str, keys: dict[str, str]) -> dict[str, Any]:
    section = doc.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"Section '{name}' must be a mapping.")
    unknown = set(section) - set(keys)
    if unknown:
        raise ConfigError(f"Unknown key(s) in section '{name}': {', '.join(sorted(map(str, unknown)))}.")
    try:
        return {keys[k]: _convert(keys[k], v) for k, v in section.items()}
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Invalid value in section '{name}': {e}") from e


def load_run_config(text: str) -> RunConfig:
    """Parse a configuration document into system parameters and simulation settings.

    Args:
        text: The YAML document.

    Returns:
        The resolved configuration. Missing keys take their defaults.

    Raises:
        ConfigError: If the document cannot be parsed, contains unknown keys, or fails validation.
    """
    doc = _parse_document(text)
    unknown = set(doc) - {"system", "radio", "geometry", "sim"}
    if unknown:
        raise ConfigError(f"Unknown section(s): {', '.join(sorted(map(str, unknown)))}.")

    raw: dict[str, Any] = {}
    for name, keys in _PARAM_KEYS.items():
        raw.update(_section(doc, name, keys))
    sim_raw = _section(doc, "sim", _SIM_KEYS)

    try:
        params = derive(SystemParams(**raw))
        sim = SimSettings(**sim_raw)
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e

    logger.debug("Loaded configuration: K=%d P=%d L=%d Q=%d f_max=%.1f Hz", params.K, params.P, params.L,
                 params.Q, params.f_max)
    return RunConfig(params, sim)


def load_config(text: str) -> SystemParams:
    """Parse a configuration document and return the derived system parameters."""
    return load_run_config(text).params


def read_run_config(path: str | None) -> RunConfig:
    """Read a configuration file, or return the defaults if no path is given."""
    if path is None:
        return RunConfig()
    with open(path) as f:
        return load_run_config(f.read())
