from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from schemas.errors import DomainError, NotSymmetric

PINV_RTOL = 1e-10
SYMMETRY_RTOL = 1e-9
CHI2_TOL = 1e-10


def pseudo_inverse(S: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric matrix through its eigendecomposition.

    Eigenvalues with |lambda| < rtol * max|lambda| are treated as zero.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {S.shape}")
    scale = float(np.max(np.abs(S))) if S.size else 0.0
    if scale == 0.0:
        return np.zeros_like(S)
    if np.max(np.abs(S - S.T)) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("matrix is not symmetric")

    evals, evecs = np.linalg.eigh(0.5 * (S + S.T))
    cutoff = rtol * float(np.max(np.abs(evals)))
    keep = np.abs(evals) >= cutoff
    inv = np.zeros_like(evals)
    inv[keep] = 1.0 / evals[keep]
    return (evecs * inv) @ evecs.T


def numerical_rank(S: np.ndarray, rtol: float = PINV_RTOL) -> int:
    evals = np.linalg.eigvalsh(np.asarray(S, dtype=float))
    if not np.any(evals):
        return 0
    return int(np.sum(np.abs(evals) >= rtol * np.max(np.abs(evals))))


def chi2_cdf_df3(x: float) -> float:
    # Closed form for three degrees of freedom: 2*Phi(sqrt x) - 1 - sqrt(2x/pi) * exp(-x/2)
    if x <= 0.0:
        return 0.0
    return float(2.0 * ndtr(math.sqrt(x)) - 1.0 - math.sqrt(2.0 * x / math.pi) * math.exp(-0.5 * x))


def chi2_quantile_df3(prob: float, tol: float = CHI2_TOL) -> float:
    """Quantile of the chi-square distribution with 3 degrees of freedom, by bisection."""
    if not (0.0 < prob < 1.0):
        raise DomainError(f"probability must lie in (0, 1), got {prob}")
    lo, hi = 0.0, 8.0
    while chi2_cdf_df3(hi) < prob:
        hi *= 2.0
    # The cdf has slope < 0.25 everywhere, so a bracket this tight meets the tolerance
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_cdf_df3(mid) < prob:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)
