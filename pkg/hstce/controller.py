"""The controller running seeded Monte Carlo experiments on the SIMO-OFDM link.

Every trial draws its channel, data and noise from a generator seeded with
``(seed, point, trial)``, so the results do not depend on the number of worker threads. The pilot
patterns are designed once per run from their own seed streams.
"""

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from hstce.channel import BemCoefficients, ChannelMatrix, channel_matrix, synthesize_coefficients
from hstce.config import RunConfig, SystemParams
from hstce.geometry import antenna_positions, dominant_index_from_position, doppler_at_position
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
from hstce.model.base_model import ChannelEstimator, nmse, reconstruct_channel
from hstce.model.oracle_model import OracleEstimator
from hstce.model.sparse_model import make_estimator
from hstce.phy import apply_channel, assemble_symbol, awgn, ber, qam4_demodulate, zf_combine
from hstce.pilots import (
    PilotOptimizer,
    equidistant_pattern,
    exhaustive_search,
    mutual_coherence,
    pattern_coherence,
)
from hstce.store.result_store import ResultRow, ResultStore

logger = logging.getLogger(__name__)

KINDS = ("design-pilot", "mse-sweep", "ber-sweep", "position-sweep", "ici-compare")
ESTIMATORS = ("ls", "omp", "bp")
DESIGNS = ("equidistant", "exhaustive", "alg1")

# SNRs of the position sweep when the configuration keeps the default grid
POSITION_SNR_DB = (15.0, 30.0)
# leakage values of the ICI comparison, on top of the configured one
ICI_LEAKAGES = (0.0, 0.1)
# estimators also run on the unpermuted pilots in the MSE sweep
NAIVE_ESTIMATORS = ("ls", "omp")


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """What to run and how often.

    Args:
        kind: The experiment, one of ``KINDS``.
        snr_db: The SNR grid in dB.
        positions_m: The position grid in m (position sweep and ICI comparison).
        position_m: The front antenna position in m (MSE and BER sweeps).
        trials: The number of trials per point.
        seed: The master seed, non-negative.
        estimators: The estimators to evaluate.
        designs: The pilot pattern designs to evaluate.
        leakage: Fraction of channel power off the dominant basis index.
        delta: The average coherence threshold of the pattern design.
        iterations: The iteration budget of the pattern design.
        candidates: The number of random candidates of the exhaustive search.
        workers: The number of worker threads.
        pattern: A stored pattern replacing the designed ``alg1`` pattern.
    """

    kind: str
    snr_db: tuple[float, ...]
    positions_m: tuple[float, ...]
    position_m: float
    trials: int = 200
    seed: int = 0
    estimators: tuple[str, ...] = ESTIMATORS
    designs: tuple[str, ...] = DESIGNS
    leakage: float = 0.0
    delta: float = 0.2
    iterations: int = 200
    candidates: int = 200
    workers: int = 1
    pattern: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"Unknown experiment '{self.kind}', expected one of {', '.join(KINDS)}.")
        if self.trials < 1:
            raise ValueError(f"At least one trial is required, got {self.trials}.")
        if self.seed < 0:
            raise ValueError(f"The seed must be non-negative, got {self.seed}.")
        if not self.snr_db or not self.positions_m:
            raise ValueError("SNR and position grids must not be empty.")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown or not self.estimators:
            raise ValueError(f"Unsupported estimator(s): {', '.join(sorted(unknown)) or 'none given'}.")
        unknown = set(self.designs) - set(DESIGNS)
        if unknown or not self.designs:
            raise ValueError(f"Unsupported pilot design(s): {', '.join(sorted(unknown)) or 'none given'}.")
        if not 0 <= self.leakage < 1:
            raise ValueError(f"Leakage must lie in [0, 1), got {self.leakage}.")
        if self.workers < 1:
            raise ValueError(f"At least one worker is required, got {self.workers}.")

    @classmethod
    def from_config(cls, kind: str, config: RunConfig, pattern: np.ndarray | None = None) -> "ExperimentSpec":
        sim = config.sim
        return cls(
            kind=kind,
            snr_db=tuple(sim.snr_db),
            positions_m=tuple(sim.resolved_positions(config.params)),
            position_m=sim.resolved_position(config.params),
            trials=sim.trials,
            seed=sim.seed,
            estimators=tuple(sim.estimators),
            designs=tuple(sim.designs),
            leakage=sim.leakage,
            delta=sim.delta,
            iterations=sim.iterations,
            candidates=sim.candidates,
            workers=sim.workers,
            pattern=pattern,
        )


@dataclass
class LinkDraw:
    """The random quantities of one trial: per-antenna channels and noise, and the data bits."""

    coeffs: list[BemCoefficients]
    channels: list[ChannelMatrix]
    bits: np.ndarray
    noise: list[np.ndarray]


def trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    """The generator of one trial, independent of execution order."""
    return np.random.default_rng(np.random.SeedSequence([seed, point, trial]))


def _design_rng(seed: int, design: str) -> np.random.Generator:
    # one stream per design, never equal to a trial stream
    return np.random.default_rng(np.random.SeedSequence([seed, DESIGNS.index(design), 0, 1]))


def _mean_by_key(results: Sequence[dict[Any, float]]) -> dict[Any, float]:
    keys = list(results[0])
    return {key: float(np.mean([r[key] for r in results])) for key in keys}


class ExperimentController:
    """The controller running one experiment.

    Args:
        params: The system parameters.
        spec: The experiment.
    """

    def __init__(self, params: SystemParams, spec: ExperimentSpec):
        self.params = params
        self.spec = spec
        self._estimators: dict[str, ChannelEstimator] = {
            name: make_estimator(name, params.S) for name in spec.estimators
        }
        self._patterns: dict[str, np.ndarray] | None = None
        self._trace: list[tuple[int, float, bool]] | None = None

    def patterns(self) -> dict[str, np.ndarray]:
        """The pilot pattern of every design, designed on first use."""
        if self._patterns is None:
            self._patterns = {name: self._design(name) for name in self.spec.designs}
        return self._patterns

    @property
    def design_trace(self) -> list[tuple[int, float, bool]] | None:
        """The acceptance trace of the ``alg1`` design, None if it was not designed in this run."""
        self.patterns()
        return self._trace

    def report_pattern(self) -> np.ndarray:
        """The pattern written next to the results: ``alg1`` if evaluated, else the first design."""
        patterns = self.patterns()
        return patterns.get("alg1", patterns[self.spec.designs[0]])

    def run(self) -> ResultStore:
        """Run the experiment named by ``self.spec.kind``."""
        logger.info("Running %s with %d trial(s) per point, seed %d", self.spec.kind, self.spec.trials,
                    self.spec.seed)
        match self.spec.kind:
            case "design-pilot":
                store = self.run_design_pilot()
            case "mse-sweep":
                store = self.run_mse_sweep()
            case "ber-sweep":
                store = self.run_ber_sweep()
            case "position-sweep":
                store = self.run_position_sweep()
            case _:
                store = self.run_ici_compare()
        logger.info("Finished %s: %d result row(s)", self.spec.kind, len(store))
        return store

    def _design(self, name: str) -> np.ndarray:
        params, spec = self.params, self.spec
        match name:
            case "equidistant":
                w = equidistant_pattern(params)
            case "exhaustive":
                w = exhaustive_search(params, spec.delta, spec.candidates, _design_rng(spec.seed, name))
            case _:
                if spec.pattern is not None:
                    w = PilotPattern(spec.pattern).w
                    if w.size != params.P:
                        raise ValueError(f"The stored pattern holds {w.size} pilots, expected {params.P}.")
                    PilotPattern(w).validate(params.K)
                else:
                    optimizer = PilotOptimizer(params, spec.delta, spec.iterations)
                    state = optimizer.run(equidistant_pattern(params), _design_rng(spec.seed, name))
                    w, self._trace = state.w_hat, state.trace
        logger.info("Pilot design %s: mu_delta = %.4f", name, pattern_coherence(w, params, spec.delta))
        return np.sort(w)

    def _map(self, fn: Callable[..., dict], jobs: Sequence[tuple]) -> list[dict]:
        # patterns are shared by all trials and must exist before the workers start
        self.patterns()
        if self.spec.workers == 1:
            return [fn(*job) for job in jobs]
        with ThreadPoolExecutor(max_workers=self.spec.workers) as pool:
            return list(pool.map(lambda job: fn(*job), jobs))

    def _draw_link(
        self, rng: np.random.Generator, q_stars: Sequence[int], snr_db: float | None, leakage: float
    ) -> LinkDraw:
        params = self.params
        coeffs = [synthesize_coefficients(params, q, leakage, rng) for q in q_stars]
        bits = rng.integers(0, 2, size=2 * (params.K - params.P))
        noise = [awgn(params.K, snr_db, rng) for _ in q_stars]
        return LinkDraw(coeffs, [channel_matrix(c, params) for c in coeffs], bits, noise)

    def _front_q_stars(self) -> list[int]:
        positions = antenna_positions(self.spec.position_m, self.params)
        return [dominant_index_from_position(p.alpha, self.params) for p in positions]

    def _row(
        self,
        metric: str,
        value: float,
        snr_db: float | None = None,
        position_m: float | None = None,
        antenna_id: int | None = None,
        estimator: str = "none",
        design: str = "none",
    ) -> ResultRow:
        return ResultRow(
            self.spec.kind,
            None if snr_db is None else float(snr_db),
            None if position_m is None else float(position_m),
            antenna_id,
            estimator,
            design,
            self.spec.trials,
            metric,
            float(value),
            self.spec.seed,
        )

    def run_design_pilot(self) -> ResultStore:
        """Coherence of every designed pattern and the pilot budget of a guard-pilot scheme."""
        params, store = self.params, ResultStore()
        for name, w in self.patterns().items():
            store.add(self._row("mu_delta", pattern_coherence(w, params, self.spec.delta), design=name))
            mu_max = mutual_coherence(partial_fourier(w, params.K, params.L))
            store.add(self._row("mu_max", mu_max, design=name))
            store.add(self._row("pilot_count", params.P, design=name))
        store.add(self._row("pilot_count", guard_pilot_count(params.P, params.Q), design="guard-pilot"))
        return store

    def _mse_trial(self, snr_idx: int, trial: int, q_stars: Sequence[int]) -> dict:
        snr = self.spec.snr_db[snr_idx]
        draw = self._draw_link(trial_rng(self.spec.seed, snr_idx, trial), q_stars, snr, self.spec.leakage)
        out: dict[tuple[str, str, int], float] = {}
        for design, w in self.patterns().items():
            symbol = assemble_symbol(PilotPattern(w), draw.bits, self.params)
            received = apply_channel(symbol.x, draw.channels, snr, noise=draw.noise)
            system = build_measurement(w, symbol.pilot_symbols, self.params)
            for r, (rx, coeffs) in enumerate(zip(received, draw.coeffs)):
                v = receive_pattern(w, coeffs.q_star, self.params)
                permuted = system.observe(extract_pilots(rx.y, v), coeffs.q_star)
                naive = system.observe(naive_extract(rx.y, w), coeffs.q_star)
                for name, estimator in self._estimators.items():
                    c_hat = estimator(permuted, rx.noise_var).c_hat
                    out[(design, name, r + 1)] = nmse(c_hat, coeffs.dominant)
                    if name in NAIVE_ESTIMATORS:
                        c_naive = estimator(naive, rx.noise_var).c_hat
                        out[(design, f"{name}-naive", r + 1)] = nmse(c_naive, coeffs.dominant)
        return out

    def run_mse_sweep(self) -> ResultStore:
        """Mean normalized error of the dominant coefficients versus SNR.

        Rows cover every design, estimator and antenna; ``-naive`` estimators read the pilots on the
        unshifted transmit pattern.
        """
        q_stars = self._front_q_stars()
        store = ResultStore()
        for snr_idx, snr in enumerate(self.spec.snr_db):
            logger.debug("MSE sweep at %.1f dB", snr)
            results = self._map(self._mse_trial, [(snr_idx, t, q_stars) for t in range(self.spec.trials)])
            for (design, name, antenna), value in _mean_by_key(results).items():
                store.add(self._row("nmse", value, snr, self.spec.position_m, antenna, name, design))
        return store

    def _position_trial(self, snr_idx: int, pos_idx: int, trial: int) -> dict:
        snr = self.spec.snr_db[snr_idx]
        q_star = dominant_index_from_position(self.spec.positions_m[pos_idx], self.params)
        # same seed at every position: only the dominant index changes
        draw = self._draw_link(trial_rng(self.spec.seed, snr_idx, trial), [q_star], snr, self.spec.leakage)
        coeffs = draw.coeffs[0]
        out: dict[tuple[str, str], float] = {}
        for design, w in self.patterns().items():
            symbol = assemble_symbol(PilotPattern(w), draw.bits, self.params)
            received = apply_channel(symbol.x, draw.channels, snr, noise=draw.noise)[0]
            oracle = apply_channel(symbol.pilots_only(), draw.channels, snr, noise=draw.noise)[0]
            system = build_measurement(w, symbol.pilot_symbols, self.params)
            v = receive_pattern(w, q_star, self.params)
            proposed = system.observe(extract_pilots(received.y, v), q_star)
            ici_free = system.observe(extract_pilots(oracle.y, v), q_star)
            for name, estimator in self._estimators.items():
                out[(design, name)] = nmse(estimator(proposed, received.noise_var).c_hat, coeffs.dominant)
                c_free = estimator(ici_free, oracle.noise_var).c_hat
                out[(design, f"{name}-icifree")] = nmse(c_free, coeffs.dominant)
        return out

    def run_position_sweep(self) -> ResultStore:
        """Mean normalized error versus the position of a single antenna.

        Each estimator is run on the received pilots and on pilots received with the data subcarriers
        zeroed (``-icifree``). The Doppler shift and dominant index of every position are reported too.
        """
        params, spec = self.params, self.spec
        store = ResultStore()
        for alpha in spec.positions_m:
            geometry = {"doppler_hz": doppler_at_position(alpha, params),
                        "q_star": dominant_index_from_position(alpha, params)}
            for metric, value in geometry.items():
                store.add(self._row(metric, value, position_m=alpha, antenna_id=1, estimator="geometry"))
        for snr_idx, snr in enumerate(spec.snr_db):
            for pos_idx, alpha in enumerate(spec.positions_m):
                logger.debug("Position sweep at %.1f dB, %.1f m", snr, alpha)
                jobs = [(snr_idx, pos_idx, t) for t in range(spec.trials)]
                for (design, name), value in _mean_by_key(self._map(self._position_trial, jobs)).items():
                    store.add(self._row("nmse", value, snr, alpha, 1, name, design))
        return store

    def _ber_trial(self, snr_idx: int, trial: int, q_stars: Sequence[int]) -> dict:
        params = self.params
        snr = self.spec.snr_db[snr_idx]
        draw = self._draw_link(trial_rng(self.spec.seed, snr_idx, trial), q_stars, snr, self.spec.leakage)
        counts = sorted({1, len(q_stars)})
        out: dict[tuple[str, str, int], float] = {}
        for design, w in self.patterns().items():
            symbol = assemble_symbol(PilotPattern(w), draw.bits, params)
            received = apply_channel(symbol.x, draw.channels, snr, noise=draw.noise)
            system = build_measurement(w, symbol.pilot_symbols, params)
            observed = [
                system.observe(extract_pilots(rx.y, receive_pattern(w, c.q_star, params)), c.q_star)
                for rx, c in zip(received, draw.coeffs)
            ]
            for name in ("perfect", *self._estimators):
                estimates = []
                for obs, rx, c in zip(observed, received, draw.coeffs):
                    estimator = OracleEstimator(c.dominant) if name == "perfect" else self._estimators[name]
                    c_hat = estimator(obs, rx.noise_var).c_hat
                    estimates.append(reconstruct_channel(c_hat, c.q_star, params))
                for n in counts:
                    x_hat, _ = zf_combine(received[:n], estimates[:n])
                    bits_hat = qam4_demodulate(x_hat[symbol.data_indices])
                    out[(design, name, n)] = ber(symbol.bits, bits_hat)
        return out

    def run_ber_sweep(self) -> ResultStore:
        """Bit error rate versus SNR after zero-forcing combining.

        Every receiver (perfect CSI and each estimator) is evaluated with the front antenna alone and with
        all R antennas on the same draws; ``antenna_id`` holds the number of combined antennas.
        """
        q_stars = self._front_q_stars()
        store = ResultStore()
        for snr_idx, snr in enumerate(self.spec.snr_db):
            logger.debug("BER sweep at %.1f dB", snr)
            results = self._map(self._ber_trial, [(snr_idx, t, q_stars) for t in range(self.spec.trials)])
            for (design, name, n), value in _mean_by_key(results).items():
                store.add(self._row("ber", value, snr, self.spec.position_m, n, name, design))
        return store

    def leakages(self) -> list[float]:
        """The leakage values of the ICI comparison."""
        return sorted({*ICI_LEAKAGES, self.spec.leakage})

    def _ici_trial(self, rho_idx: int, pos_idx: int, trial: int) -> dict:
        rho = self.leakages()[rho_idx]
        q_star = dominant_index_from_position(self.spec.positions_m[pos_idx], self.params)
        draw = self._draw_link(trial_rng(self.spec.seed, rho_idx, trial), [q_star], None, rho)
        coeffs = draw.coeffs[0]
        out: dict[tuple[str, str], float] = {}
        for design, w in self.patterns().items():
            symbol = assemble_symbol(PilotPattern(w), draw.bits, self.params)
            y = apply_channel(symbol.x, draw.channels, None)[0].y
            clean = build_measurement(w, symbol.pilot_symbols, self.params).A @ coeffs.dominant
            out[(design, "naive")] = ici_power_ratio(naive_extract(y, w), clean)
            v = receive_pattern(w, q_star, self.params)
            out[(design, "permuted")] = ici_power_ratio(extract_pilots(y, v), clean)
        return out

    def run_ici_compare(self) -> ResultStore:
        """Interference-to-signal power of the pilots read with and without the receive permutation.

        Noiseless; one metric ``ici_ratio_rho<leakage>`` per leakage value.
        """
        spec = self.spec
        store = ResultStore()
        for rho_idx, rho in enumerate(self.leakages()):
            for pos_idx, alpha in enumerate(spec.positions_m):
                jobs = [(rho_idx, pos_idx, t) for t in range(spec.trials)]
                for (design, name), value in _mean_by_key(self._map(self._ici_trial, jobs)).items():
                    store.add(self._row(f"ici_ratio_rho{rho:g}", value, None, alpha, 1, name, design))
        return store


def run_experiment(config: RunConfig, kind: str, pattern: np.ndarray | None = None) -> ResultStore:
    """Run one experiment with the settings of a configuration."""
    return ExperimentController(config.params, ExperimentSpec.from_config(kind, config, pattern)).run()
