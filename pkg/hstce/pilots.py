"""Pilot pattern design by minimizing the average coherence of the partial Fourier dictionary.

The design objective ``mu_delta(F_L(w, :))`` only involves K, P, L and delta: the receive permutation
selects an identity block and a constant pilot amplitude cancels in the column normalization, so one
pattern serves every antenna at every train position.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from hstce.config import SystemParams
from hstce.ici import partial_fourier

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 0.2


@dataclass(frozen=True)
class CoherenceParams:
    """Threshold of the average coherence, in (0, 1)."""

    delta: float = DEFAULT_DELTA

    def __post_init__(self) -> None:
        if not 0 < self.delta < 1:
            raise ValueError(f"Coherence threshold must lie in (0, 1), got {self.delta}.")


def _gram(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix)
    norms = np.linalg.norm(matrix, axis=0)
    if np.any(norms == 0):
        raise ValueError("Coherence is undefined for a matrix with zero columns.")
    normalized = matrix / norms
    gram = np.abs(normalized.conj().T @ normalized)
    i, j = np.triu_indices(gram.shape[0], k=1)
    return gram[i, j]


def average_coherence(matrix: np.ndarray, delta: float = DEFAULT_DELTA) -> float:
    """Mean absolute inner product of the normalized column pairs that reach ``delta``.

    Returns 0 when no pair reaches the threshold.

    >>> round(average_coherence(np.array([[1.0, 1.0], [0.0, 1.0]]), 0.2), 8)
    0.70710678

    Raises:
        ValueError: If the matrix has a zero column.
    """
    pairs = _gram(matrix)
    selected = pairs[pairs >= delta]
    return float(selected.mean()) if selected.size else 0.0


def mutual_coherence(matrix: np.ndarray) -> float:
    """Largest absolute inner product between distinct normalized columns."""
    pairs = _gram(matrix)
    return float(pairs.max()) if pairs.size else 0.0


def pattern_coherence(w: np.ndarray, params: SystemParams, delta: float = DEFAULT_DELTA) -> float:
    """The design objective ``mu_delta(F_L(w, :))``."""
    return average_coherence(partial_fourier(w, params.K, params.L), delta)


def equidistant_pattern(params: SystemParams) -> np.ndarray:
    """Pilots at ``floor(p K / P)``.

    >>> equidistant_pattern(SystemParams(K=64, P=8, L=8, S=2))
    array([ 0,  8, 16, 24, 32, 40, 48, 56])
    """
    return (np.arange(params.P) * params.K) // params.P


def random_pattern(K: int, P: int, rng: np.random.Generator) -> np.ndarray:
    """A uniformly random sorted pattern of P distinct subcarriers."""
    return np.sort(rng.choice(K, size=P, replace=False))


def perturb(w: np.ndarray, k: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """Replace the k-th pilot by a random subcarrier not yet in the pattern.

    The input is left untouched; the result is sorted.

    Raises:
        ValueError: If ``k`` is out of range or no free subcarrier exists.
    """
    w = np.asarray(w, dtype=int)
    if not 0 <= k < w.size:
        raise ValueError(f"Pilot position must lie in [0, {w.size}), got {k}.")
    free = np.setdiff1d(np.arange(K), w)
    if free.size == 0:
        raise ValueError("Every subcarrier already carries a pilot.")
    w_tilde = w.copy()
    w_tilde[k] = rng.choice(free)
    return np.sort(w_tilde)


@dataclass
class OptimizerState:
    """State of the low coherence pattern search.

    Attributes:
        Gamma: Occupation probabilities of the states 0..M*P; state m is the pattern accepted at
            iteration m (state 0 is the initial pattern).
        w: The current pattern ``w^(m)``.
        w_hat: The pattern with the largest occupation probability.
        kappa: The state index of the current pattern.
        iota: The state index of ``w_hat``.
        m: The iteration counter.
        mu: The objective of the current pattern.
        trace: One ``(m, mu, accepted)`` entry per iteration, mu of ``w^(m+1)``.
    """

    Gamma: np.ndarray
    w: np.ndarray
    w_hat: np.ndarray
    mu: float
    kappa: int = 0
    iota: int = 0
    m: int = 0
    trace: list[tuple[int, float, bool]] = field(default_factory=list)


class PilotOptimizer:
    """Low coherence pilot pattern design by discrete stochastic approximation.

    Each iteration replaces one pilot with a random free subcarrier and moves to the candidate only if
    its average coherence is strictly lower. The returned pattern is the visited state with the
    largest occupation probability, updated with the decreasing step size 1/(m+1).

    Args:
        params: The system parameters (only K, P and L enter the objective).
        delta: The average coherence threshold.
        iterations: The iteration budget M*P, a multiple of P.
    """

    def __init__(self, params: SystemParams, delta: float = DEFAULT_DELTA, iterations: int = 200):
        CoherenceParams(delta)
        if iterations < 0 or iterations % params.P:
            raise ValueError(f"Iteration budget must be a non-negative multiple of P={params.P}.")
        self.params = params
        self.delta = delta
        self.iterations = iterations

    def objective(self, w: np.ndarray) -> float:
        return pattern_coherence(w, self.params, self.delta)

    def init_state(self, w0: np.ndarray) -> OptimizerState:
        w0 = np.sort(np.asarray(w0, dtype=int))
        if len(np.unique(w0)) != w0.size or w0.size != self.params.P:
            raise ValueError(f"Initial pattern must hold {self.params.P} distinct indices.")
        if np.any((w0 < 0) | (w0 >= self.params.K)):
            raise ValueError(f"Pilot indices must lie in [0, {self.params.K}).")
        Gamma = np.zeros(self.iterations + 1)
        Gamma[0] = 1.0
        return OptimizerState(Gamma, w0, w0.copy(), self.objective(w0))

    def step(self, state: OptimizerState, k: int, rng: np.random.Generator) -> OptimizerState:
        """Run one iteration on pilot position ``k`` (in place)."""
        m = state.m
        candidate = perturb(state.w, k, self.params.K, rng)
        mu_candidate = self.objective(candidate)
        accepted = mu_candidate < state.mu
        if accepted:
            state.w, state.mu, state.kappa = candidate, mu_candidate, m + 1

        # Gamma[m+1] = Gamma[m] + (U[m+1] - Gamma[m]) / (m+1), U pointing at the occupied state
        eta = 1.0 / (m + 1)
        state.Gamma *= 1 - eta
        state.Gamma[state.kappa] += eta
        # ties go to the most recent state
        if state.Gamma[state.kappa] >= state.Gamma[state.iota]:
            state.w_hat, state.iota = state.w, state.kappa

        state.trace.append((m, state.mu, accepted))
        state.m = m + 1
        if accepted:
            logger.debug("Iteration %d accepted, mu_delta = %.6f", m, state.mu)
        return state

    def run(self, w0: np.ndarray, rng: np.random.Generator) -> OptimizerState:
        """Run the full double loop over M pattern sets and P pilot positions."""
        state = self.init_state(w0)
        for _ in range(self.iterations // self.params.P):
            for k in range(self.params.P):
                self.step(state, k, rng)
        logger.info(
            "Pattern design finished after %d iterations: mu_delta %.4f -> %.4f",
            self.iterations,
            self.objective(np.asarray(w0)),
            self.objective(state.w_hat),
        )
        return state


def algorithm1(
    w0: np.ndarray,
    params: SystemParams,
    delta: float = DEFAULT_DELTA,
    rng: np.random.Generator | None = None,
    iterations: int = 200,
) -> np.ndarray:
    """Design a low coherence pilot pattern starting from ``w0``.

    Raises:
        ValueError: If ``iterations`` is not a multiple of P.
    """
    rng = rng if rng is not None else np.random.default_rng()
    return PilotOptimizer(params, delta, iterations).run(w0, rng).w_hat


def exhaustive_search(
    params: SystemParams,
    delta: float = DEFAULT_DELTA,
    n_candidates: int = 200,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Best of ``n_candidates`` uniformly random patterns (first one wins ties)."""
    if n_candidates < 1:
        raise ValueError(f"At least one candidate is required, got {n_candidates}.")
    rng = rng if rng is not None else np.random.default_rng()
    best, best_mu = None, np.inf
    for _ in range(n_candidates):
        w = random_pattern(params.K, params.P, rng)
        mu = pattern_coherence(w, params, delta)
        if mu < best_mu:
            best, best_mu = w, mu
    assert best is not None
    return best


def save_pattern(path: str, w: np.ndarray) -> None:
    """Write a pattern as text, one pilot index per line."""
    with open(path, "w") as f:
        for index in np.asarray(w, dtype=int):
            f.write(f"{index}\n")


def load_pattern(path: str, params: SystemParams | None = None) -> np.ndarray:
    """Read a pattern written by ``save_pattern``.

    Raises:
        ValueError: If the file holds duplicate or (for the given parameters) invalid indices.
    """
    with open(path) as f:
        lines = [line.strip() for line in f if line.strip()]
    try:
        w = np.array(sorted(int(line) for line in lines), dtype=int)
    except ValueError as e:
        raise ValueError(f"Pattern file {path} must hold one integer per line.") from e
    if len(np.unique(w)) != w.size:
        raise ValueError(f"Pattern file {path} holds duplicate indices.")
    if params is not None and (w.size != params.P or np.any((w < 0) | (w >= params.K))):
        raise ValueError(f"Pattern file {path} does not hold {params.P} indices in [0, {params.K}).")
    return w
