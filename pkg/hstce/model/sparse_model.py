"""Sparse and least-squares estimators of the dominant CE-BEM coefficient block."""

import logging

import numpy as np
import scipy.linalg

from hstce.ici import MeasurementSystem
from hstce.model.base_model import ChannelEstimator, EstimateResult

logger = logging.getLogger(__name__)

# relative magnitude below which a BP coefficient does not count as detected
SUPPORT_THRESHOLD = 1e-6

# singular values below this fraction of the largest do not count towards the rank
RANK_TOLERANCE = 1e-8

# a BP debias whose norm exceeds the ISTA iterate's by more than this factor is rejected
DEBIAS_GROWTH = 3.0


def _column_norms(A: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("The sensing matrix has a zero column.")
    return norms


def _least_squares(A: np.ndarray, y: np.ndarray, support: np.ndarray) -> tuple[np.ndarray, int]:
    """Least-squares coefficients on ``support`` and the rank of the active columns."""
    coef, _, rank, _ = scipy.linalg.lstsq(A[:, support], y, cond=RANK_TOLERANCE)
    return coef, int(rank)


def omp(
    A: np.ndarray, y: np.ndarray, sparsity: int | None = None, tol: float | None = None
) -> EstimateResult:
    """Orthogonal matching pursuit.

    Each iteration adds the column of the normalized matrix most correlated with the residual and
    refits all active coefficients by least squares, so the residual stays orthogonal to the active
    columns.

    Args:
        A: The P x L sensing matrix.
        y: The P observations.
        sparsity: Stop after this many atoms. If None, run until the residual meets ``tol``.
        tol: Residual norm at which to stop. Defaults to ``1e-10 * ||y||``.

    Returns:
        The estimate. ``converged`` is False if an added atom made the active set rank deficient; that
        atom is dropped and the search stops.

    Raises:
        ValueError: If ``A`` has a zero column.
    """
    A, y = np.asarray(A), np.asarray(y)
    P, L = A.shape
    normalized = A / _column_norms(A)
    tol = 1e-10 * float(np.linalg.norm(y)) if tol is None else tol
    limit = min(P, L) if sparsity is None else min(sparsity, P, L)

    support: list[int] = []
    coef = np.zeros(0, dtype=complex)
    residual = y.astype(complex)
    converged = True
    iterations = 0
    while len(support) < limit and np.linalg.norm(residual) > tol:
        iterations += 1
        correlation = np.abs(normalized.conj().T @ residual)
        correlation[support] = -1.0
        trial = support + [int(np.argmax(correlation))]
        trial_coef, rank = _least_squares(A, y, np.array(trial))
        if rank < len(trial):
            logger.warning("OMP stopped at %d atoms: singular active set", len(support))
            converged = False
            break
        support, coef = trial, trial_coef
        residual = y - A[:, support] @ coef

    c_hat = np.zeros(L, dtype=complex)
    c_hat[support] = coef
    order = np.sort(np.array(support, dtype=int))
    return EstimateResult(c_hat, order, float(np.linalg.norm(residual)), iterations, converged)


def lasso_ista(
    A: np.ndarray,
    y: np.ndarray,
    lam: float,
    c0: np.ndarray | None = None,
    max_iter: int = 10_000,
    tol: float = 1e-8,
) -> tuple[np.ndarray, list[float], int, bool]:
    """Proximal gradient (ISTA) for ``min 0.5 ||A c - y||^2 + lam ||c||_1`` over complex c.

    The fixed step ``1 / ||A||_2^2`` makes the objective non-increasing.

    Returns:
        The solution, the objective after every iteration, the iteration count, and whether the
        relative change dropped below ``tol`` before ``max_iter``.
    """
    step = 1.0 / np.linalg.norm(A, 2) ** 2
    c = np.zeros(A.shape[1], dtype=complex) if c0 is None else np.asarray(c0, dtype=complex).copy()
    tiny = np.finfo(float).tiny
    objective = []
    for iteration in range(1, max_iter + 1):
        z = c - step * (A.conj().T @ (A @ c - y))
        magnitude = np.abs(z)
        c_new = z * np.maximum(1.0 - step * lam / np.maximum(magnitude, tiny), 0.0)
        objective.append(float(0.5 * np.linalg.norm(A @ c_new - y) ** 2 + lam * np.sum(np.abs(c_new))))
        change = np.linalg.norm(c_new - c)
        scale = np.linalg.norm(c_new)
        c = c_new
        if change <= tol * scale or change == 0:
            return c, objective, iteration, True
    return c, objective, max_iter, False


def bp(
    A: np.ndarray,
    y: np.ndarray,
    noise_level: float = 0.0,
    max_iter: int = 10_000,
    tol: float = 1e-8,
    reduction: float = 0.5,
    max_stages: int = 40,
) -> EstimateResult:
    """Basis pursuit denoising ``min ||c||_1 s.t. ||A c - y|| <= noise_level``.

    Solved by ISTA on the regularized problem with the weight lowered geometrically from
    ``max |A^H y|`` (where the zero vector is optimal), warm-started, until the least-squares debiased
    fit on the detected support meets the noise level. The debiased coefficients are returned.

    A debias is rejected when the detected columns are rank deficient or its coefficients outgrow the
    ISTA iterate by more than ``DEBIAS_GROWTH``. The weight is then lowered further. If the ISTA iterate
    of a rejected stage already meets the noise level, that iterate is returned unconverged.

    Args:
        A: The P x L sensing matrix.
        y: The P observations.
        noise_level: Admissible residual norm. 0 for noiseless observations.
        max_iter: Iteration cap of each ISTA run.
        tol: Relative change at which an ISTA run stops.
        reduction: Factor applied to the regularization weight between runs.
        max_stages: Maximum number of weight reductions.

    Returns:
        The estimate. ``converged`` is False if an ISTA run hit its iteration cap, the noise level
        was never met, or the returned coefficients are an ISTA iterate after a rejected debias.
    """
    A, y = np.asarray(A), np.asarray(y)
    _column_norms(A)
    L = A.shape[1]
    y_norm = float(np.linalg.norm(y))
    if y_norm <= noise_level or y_norm == 0:
        return EstimateResult(np.zeros(L, dtype=complex), np.zeros(0, dtype=int), y_norm, 0)

    target = max(noise_level, 1e-10 * y_norm)
    lam = float(np.max(np.abs(A.conj().T @ y)))
    c = np.zeros(L, dtype=complex)
    c_hat = c
    residual_norm = y_norm
    support = np.zeros(0, dtype=int)
    iterations = 0
    converged = False
    for _ in range(max_stages):
        lam *= reduction
        c, _, used, stage_converged = lasso_ista(A, y, lam, c, max_iter, tol)
        iterations += used
        peak = np.max(np.abs(c))
        if peak == 0:
            continue
        support = np.flatnonzero(np.abs(c) > SUPPORT_THRESHOLD * peak)
        coef, rank = _least_squares(A, y, support)
        if rank < support.size or np.linalg.norm(coef) > DEBIAS_GROWTH * np.linalg.norm(c):
            logger.debug("BP rejected the debias on %d atoms (rank %d)", support.size, rank)
            c_hat = c
            residual_norm = float(np.linalg.norm(y - A @ c))
            if residual_norm <= target:
                break
            continue
        c_hat = np.zeros(L, dtype=complex)
        c_hat[support] = coef
        residual_norm = float(np.linalg.norm(y - A @ c_hat))
        if residual_norm <= target:
            converged = stage_converged
            break

    if not converged:
        logger.warning("BP did not converge (residual %.3e, target %.3e)", residual_norm, target)
    return EstimateResult(c_hat, support, residual_norm, iterations, converged)


def ls_estimate(A: np.ndarray, y: np.ndarray) -> EstimateResult:
    """Minimum-norm least-squares solution, exact interpolation when P < L."""
    A, y = np.asarray(A), np.asarray(y)
    c_hat = scipy.linalg.lstsq(A, y)[0]
    residual = float(np.linalg.norm(y - A @ c_hat))
    return EstimateResult(c_hat, np.flatnonzero(c_hat), residual, 1)


class OmpEstimator(ChannelEstimator):
    """OMP with known sparsity, or residual-driven when ``sparsity`` is None.

    Args:
        sparsity: The number of dominant taps, if known.
    """

    name = "omp"

    def __init__(self, sparsity: int | None = None):
        self.sparsity = sparsity

    def __call__(self, system: MeasurementSystem, noise_var: float = 0.0) -> EstimateResult:
        if system.y_obs is None:
            raise ValueError("The measurement system holds no observations.")
        tol = None
        if self.sparsity is None and noise_var > 0:
            tol = float(np.sqrt(system.A.shape[0] * noise_var))
        return omp(system.A, system.y_obs, self.sparsity, tol)


class BpEstimator(ChannelEstimator):
    """BP with the noise level ``factor * sqrt(P * noise_var)``.

    Args:
        factor: Margin on the expected noise norm.
    """

    name = "bp"

    def __init__(self, factor: float = 1.1):
        self.factor = factor

    def __call__(self, system: MeasurementSystem, noise_var: float = 0.0) -> EstimateResult:
        if system.y_obs is None:
            raise ValueError("The measurement system holds no observations.")
        noise_level = self.factor * float(np.sqrt(system.A.shape[0] * noise_var))
        return bp(system.A, system.y_obs, noise_level)


class LsEstimator(ChannelEstimator):
    """Minimum-norm least squares, ignoring sparsity."""

    name = "ls"

    def __call__(self, system: MeasurementSystem, noise_var: float = 0.0) -> EstimateResult:
        if system.y_obs is None:
            raise ValueError("The measurement system holds no observations.")
        return ls_estimate(system.A, system.y_obs)


def make_estimator(name: str, sparsity: int | None = None) -> ChannelEstimator:
    """Create an estimator by name (ls, omp or bp).

    Raises:
        ValueError: For an unknown name.
    """
    match name.lower():
        case "ls":
            return LsEstimator()
        case "omp":
            return OmpEstimator(sparsity)
        case "bp":
            return BpEstimator()
        case _:
            raise ValueError(f"Unsupported estimator: {name}")
