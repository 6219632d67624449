"""Patch-level baseline estimators: Nakagami MLE and the log-moment alpha estimator.

Both estimators work on intensities I = a^2 of envelope samples. Exact-zero
intensities (possible in quantized external data, probability zero under the
model) are dropped before any log moment is taken; if more than 1% of a
sample is dropped the estimate is flagged degenerate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterDomainError
from .models import M_BRACKET, NakagamiParams, solve_m_from_log_moment_gap

__all__ = [
    "Diagnostic",
    "EstimateResult",
    "ALPHA_CLAMP_DEFAULT",
    "x_statistic",
    "u_statistic",
    "nakagami_mle",
    "estimate_alpha",
]

MIN_SAMPLES = 16
ALPHA_CLAMP_DEFAULT = (0.05, 100.0)
_MAX_ZERO_FRACTION = 0.01
_DEGENERATE_GAP = 1e-12
_X_FDS_MARGIN = 1e-6  # X below 1 + margin is indistinguishable from fully developed speckle


class Diagnostic(enum.Enum):
    OK = "ok"
    CLAMPED_LOW = "clamped_low"
    CLAMPED_HIGH = "clamped_high"
    DEGENERATE_INPUT = "degenerate_input"


@dataclass(frozen=True)
class EstimateResult:
    """Outcome of a single parameter estimate.

    ``valid`` is True only for an unclamped, non-degenerate estimate; clamped
    results still carry the saturated bound in ``value`` for rendering.
    """

    value: float
    valid: bool
    sample_count: int
    diagnostic: Diagnostic

    @staticmethod
    def ok(value: float, n: int) -> "EstimateResult":
        return EstimateResult(value, True, n, Diagnostic.OK)

    @staticmethod
    def flagged(value: float, n: int, diagnostic: Diagnostic) -> "EstimateResult":
        return EstimateResult(value, False, n, diagnostic)


def _checked_intensities(intensities, minimum: int) -> np.ndarray:
    arr = np.asarray(intensities, dtype=float).ravel()
    if arr.size < minimum:
        raise ParameterDomainError(f"need at least {minimum} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ParameterDomainError("intensities must be finite")
    if np.any(arr <= 0):
        raise ParameterDomainError("intensities must be strictly positive")
    return arr


def x_statistic(intensities) -> float:
    """mean(I log I) / mean(I) - mean(log I); equals 1 + 1/alpha for K-distributed I."""
    arr = _checked_intensities(intensities, MIN_SAMPLES)
    log_i = np.log(arr)
    return float(np.mean(arr * log_i) / np.mean(arr) - np.mean(log_i))


def u_statistic(intensities) -> float:
    """mean(log I) - log(mean(I)); nonpositive by Jensen's inequality."""
    arr = _checked_intensities(intensities, MIN_SAMPLES)
    return float(np.mean(np.log(arr)) - math.log(np.mean(arr)))


def _log_moments(samples) -> tuple[np.ndarray, int, int]:
    """Validate amplitudes, square them, drop exact zeros. Returns (I>0, n_total, n_dropped)."""
    arr = np.asarray(samples, dtype=float).ravel()
    if arr.size < MIN_SAMPLES:
        raise ParameterDomainError(f"need at least {MIN_SAMPLES} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ParameterDomainError("amplitudes must be finite and >= 0")
    intensities = arr * arr
    keep = intensities > 0
    dropped = int(arr.size - np.count_nonzero(keep))
    return intensities[keep], arr.size, dropped


def nakagami_mle(samples) -> tuple[NakagamiParams | None, EstimateResult]:
    """Maximum-likelihood Nakagami fit of envelope amplitudes.

    omega_hat is the mean intensity; m_hat solves
    log(m) - digamma(m) = log(omega_hat) - mean(log I) by safeguarded Newton
    iteration. Returns ``(params, result)`` with ``result.value = m_hat``;
    ``params`` is None when the fit is degenerate or saturated.
    """
    intensities, n, dropped = _log_moments(samples)
    if dropped > _MAX_ZERO_FRACTION * n or intensities.size < MIN_SAMPLES:
        return None, EstimateResult.flagged(math.nan, n, Diagnostic.DEGENERATE_INPUT)
    omega = float(np.mean(intensities))
    gap = math.log(omega) - float(np.mean(np.log(intensities)))
    if not gap > _DEGENERATE_GAP:
        return None, EstimateResult.flagged(math.nan, n, Diagnostic.DEGENERATE_INPUT)
    m = float(solve_m_from_log_moment_gap(gap))
    if m <= M_BRACKET[0]:
        return None, EstimateResult.flagged(M_BRACKET[0], n, Diagnostic.CLAMPED_LOW)
    if m >= M_BRACKET[1]:
        return None, EstimateResult.flagged(M_BRACKET[1], n, Diagnostic.CLAMPED_HIGH)
    return NakagamiParams(m, omega), EstimateResult.ok(m, n)


def estimate_alpha(samples, clamp: tuple[float, float] = ALPHA_CLAMP_DEFAULT) -> EstimateResult:
    """Log-moment estimate of the HK clustering parameter for eps = 0 data.

    Inverts the population identity X = 1 + 1/alpha, exact for K-distributed
    intensities, and clamps to ``clamp``. X at or below 1 means the sample is
    indistinguishable from fully developed speckle, reported as a saturated
    high clamp.
    """
    lo, hi = clamp
    if not 0 < lo < hi:
        raise ParameterDomainError(f"invalid clamp range {clamp}")
    intensities, n, dropped = _log_moments(samples)
    if dropped > _MAX_ZERO_FRACTION * n or intensities.size < MIN_SAMPLES:
        return EstimateResult.flagged(math.nan, n, Diagnostic.DEGENERATE_INPUT)
    log_i = np.log(intensities)
    x_stat = float(np.mean(intensities * log_i) / np.mean(intensities) - np.mean(log_i))
    if x_stat <= 1.0 + _X_FDS_MARGIN:
        return EstimateResult.flagged(hi, n, Diagnostic.CLAMPED_HIGH)
    alpha = 1.0 / (x_stat - 1.0)
    if alpha > hi:
        return EstimateResult.flagged(hi, n, Diagnostic.CLAMPED_HIGH)
    if alpha < lo:
        return EstimateResult.flagged(lo, n, Diagnostic.CLAMPED_LOW)
    return EstimateResult.ok(alpha, n)
