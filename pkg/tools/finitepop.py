from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List

import numpy as np

from schemas.errors import NoAcceptedSamples, ZeroCell
from schemas.results import CovMatrix4, FpcResult, ResampleConfig
from schemas.tables import Counts2x2
from tools.linalg import chi2_quantile_df3, numerical_rank, pseudo_inverse
from tools.tables import from_counts, phi_cells
from tools.threshold import threshold_T

logger = logging.getLogger(__name__)

CHUNK_SIZE = 20_000
MIN_REPORTABLE_SAMPLES = 1000


def multinomial_covariance(x0: Counts2x2) -> CovMatrix4:
    """Covariance of Mult(n, x0/n) cell counts: n*diag(p) - n*p*p^T."""
    n = x0.n
    p = np.asarray(x0.cells(), dtype=float) / n
    sigma = n * (np.diag(p) - np.outer(p, p))
    return CovMatrix4(sigma=sigma, pinv=pseudo_inverse(sigma), rank=numerical_rank(sigma))


def quadratic_form(x: np.ndarray, x0: np.ndarray, pinv: np.ndarray) -> np.ndarray:
    # (x - x0)^T pinv (x - x0), row-wise over a batch of tables
    diff = np.atleast_2d(np.asarray(x, dtype=float) - x0)
    return np.einsum("ij,jk,ik->i", diff, pinv, diff)


def synthetic_thresholds(draws: np.ndarray) -> np.ndarray:
    # T = 1 - |phi| per row of (x01, x11, x00, x10); NaN for a degenerate marginal
    return 1.0 - np.abs(phi_cells(draws[:, 0], draws[:, 1], draws[:, 2], draws[:, 3]))


@dataclass
class _Partition:
    max_accepted: float
    accepted: int
    degenerate: int
    thresholds: np.ndarray


def _resample_partition(
    seed_seq: np.random.SeedSequence,
    size: int,
    x0: np.ndarray,
    pinv: np.ndarray,
    cutoff: float,
) -> _Partition:
    # Philox is counter based: the stream depends only on the seed sequence
    rng = np.random.Generator(np.random.Philox(seed_seq))
    n = int(x0.sum())
    p0 = x0 / n
    best = -np.inf
    accepted = degenerate = 0
    kept: List[np.ndarray] = []
    remaining = size
    while remaining > 0:
        batch = min(CHUNK_SIZE, remaining)
        remaining -= batch
        draws = rng.multinomial(n, p0, size=batch)
        T = synthetic_thresholds(draws)
        valid = ~np.isnan(T)
        degenerate += int(batch - valid.sum())
        ok = valid & (quadratic_form(draws, x0, pinv) < cutoff)
        accepted += int(ok.sum())
        if ok.any():
            best = max(best, float(T[ok].max()))
        kept.append(T[valid])
    return _Partition(max_accepted=best, accepted=accepted, degenerate=degenerate, thresholds=np.concatenate(kept))


def _split(total: int, parts: int) -> List[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def fpc_threshold(x0: Counts2x2, cfg: ResampleConfig) -> FpcResult:
    """Finite-population threshold T_n(1 - alpha) by multinomial resampling around x0.

    T_n is the largest T over synthetic tables inside the chi-square(3) confidence region
    (x0 itself always belongs to it). The (1 - alpha) quantile and the standard deviation of
    all synthetic T values come out of the same pass.
    """
    if x0.has_zero_cell():
        raise ZeroCell(f"observed table {x0.cells()} has an empty cell")
    if cfg.num_samples < MIN_REPORTABLE_SAMPLES:
        logger.warning("only %d synthetic samples; results are not reportable", cfg.num_samples)

    counts = np.asarray(x0.cells(), dtype=float)
    cov = multinomial_covariance(x0)
    cutoff = chi2_quantile_df3(1.0 - cfg.alpha)
    T_point = threshold_T(from_counts(x0)).T

    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.workers)
    sizes = _split(cfg.num_samples, cfg.workers)
    jobs = [(seq, size, counts, cov.pinv, cutoff) for seq, size in zip(seqs, sizes) if size > 0]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda job: _resample_partition(*job), jobs))
    else:
        parts = [_resample_partition(*job) for job in jobs]

    pooled = np.concatenate([part.thresholds for part in parts])
    degenerate = sum(part.degenerate for part in parts)
    if pooled.size == 0:
        raise NoAcceptedSamples("every synthetic table had a degenerate marginal")
    if degenerate:
        logger.warning("%d synthetic tables skipped for a degenerate marginal", degenerate)

    T_n = max([T_point] + [part.max_accepted for part in parts])
    result = FpcResult(
        T_n=T_n,
        T_point=T_point,
        quantile_alt=float(np.quantile(pooled, 1.0 - cfg.alpha)),
        se_alt=float(np.std(pooled, ddof=1)) if pooled.size > 1 else 0.0,
        accepted_count=sum(part.accepted for part in parts),
        degenerate_count=degenerate,
        chi2_cutoff=cutoff,
        config=cfg,
    )
    logger.info(
        "T_n(%.3f)=%.4f from %d accepted of %d samples (T_point=%.4f)",
        1.0 - cfg.alpha, T_n, result.accepted_count, cfg.num_samples, T_point,
    )
    return result
