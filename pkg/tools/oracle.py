"""Brute-force checks against latent populations of (pi, r0, r1) point masses.

Nothing here reads observed data. Populations are generated, their exact moments computed,
and the estimators elsewhere in `tools` are held to what those moments imply.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from schemas.errors import DegenerateMean, DomainError
from schemas.evidence import TwinCohort
from schemas.population import EtaValue, LatentPopulation, ThresholdCheck
from schemas.tables import Counts2x2, Probs2x2
from tools.finitepop import multinomial_covariance, quadratic_form
from tools.threshold import threshold_T

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-9
PSD_SLACK = 1e-9


def _normalised_sd(values: np.ndarray) -> Tuple[float, float]:
    mean = float(values.mean())
    if not (0.0 < mean < 1.0):
        raise DegenerateMean(f"mean {mean} is not interior")
    var = float(np.mean((values - mean) ** 2))
    return mean, min(1.0, math.sqrt(var / (mean * (1.0 - mean))))


def eta_of(pop: LatentPopulation) -> EtaValue:
    """eta = 1 - R_pi * R_r with population (not sample) variances."""
    _, R_pi = _normalised_sd(pop.pi)
    _, R_r = _normalised_sd(pop.r)
    return EtaValue(eta=1.0 - R_pi * R_r, R_pi=R_pi, R_r=R_r)


def eta_incremental(pop: LatentPopulation) -> EtaValue:
    # Same quantity through running (Welford) moments; used to cross-check eta_of
    def running(values: Sequence[float]) -> float:
        mean = m2 = 0.0
        for i, v in enumerate(values, start=1):
            delta = v - mean
            mean += delta / i
            m2 += delta * (v - mean)
        if not (0.0 < mean < 1.0):
            raise DegenerateMean(f"mean {mean} is not interior")
        return min(1.0, math.sqrt((m2 / len(values)) / (mean * (1.0 - mean))))

    R_pi = running(pop.pi.tolist())
    R_r = running(pop.r.tolist())
    return EtaValue(eta=1.0 - R_pi * R_r, R_pi=R_pi, R_r=R_r)


def cell_moments(pop: LatentPopulation) -> np.ndarray:
    # Per-individual cell probabilities (p01, p11, p00, p10), one row each
    pi, r0, r1 = pop.pi, pop.r0, pop.r1
    return np.column_stack([(1.0 - pi) * r0, pi * r1, (1.0 - pi) * (1.0 - r0), pi * (1.0 - r1)])


def expected_cells(pop: LatentPopulation) -> Probs2x2:
    cells = cell_moments(pop).mean(axis=0)
    cells = cells / cells.sum()
    return Probs2x2(p01=float(cells[0]), p11=float(cells[1]), p00=float(cells[2]), p10=float(cells[3]))


def verify_threshold_bound(pop: LatentPopulation) -> ThresholdCheck:
    """Any null population consistent with a table has eta no larger than that table's T."""
    if not pop.is_null:
        raise DomainError("threshold bound applies to null populations (r0 == r1) only")
    eta = eta_of(pop).eta
    T = threshold_T(expected_cells(pop)).T
    ok = eta <= T + BOUND_SLACK
    if not ok:
        logger.warning("eta=%.12f exceeds T=%.12f for a %d-point population", eta, T, pop.size)
    return ThresholdCheck(eta=eta, T=T, ok=ok, note=None if ok else "eta above threshold")


def random_null_population(rng: np.random.Generator, size: int) -> LatentPopulation:
    """Null population with propensities and prognoses drawn from Beta shapes of random skew."""
    a, b = rng.uniform(0.3, 3.0, size=2)
    c, d = rng.uniform(0.3, 3.0, size=2)
    pi = np.clip(rng.beta(a, b, size=size), 1e-6, 1.0 - 1e-6)
    r = np.clip(rng.beta(c, d, size=size), 1e-6, 1.0 - 1e-6)
    if rng.random() < 0.5:
        # Couple r to pi so the expected table carries real association
        r = np.clip(0.5 * r + 0.5 * pi, 1e-6, 1.0 - 1e-6)
    return LatentPopulation.null(pi, r)


def diagonal_population(eps: float) -> LatentPopulation:
    # Two equal-weight points (eps, eps) and (1 - eps, 1 - eps); eta equals T on this family
    if not (0.0 < eps < 0.5):
        raise DomainError(f"eps must lie in (0, 0.5), got {eps}")
    return LatentPopulation.null([eps, 1.0 - eps], [eps, 1.0 - eps])


def simulate_twin_cohort(psi: Sequence[float], pairs_per_psi: int, seed: Optional[int] = None) -> TwinCohort:
    """Reared-apart twins: both members of a pair are independent Bernoulli(psi)."""
    psi_arr = np.asarray(psi, dtype=float)
    if psi_arr.size == 0 or not np.all((psi_arr > 0.0) & (psi_arr < 1.0)):
        raise DomainError("psi values must be a nonempty list inside (0, 1)")
    if pairs_per_psi < 1:
        raise DomainError(f"pairs_per_psi must be positive, got {pairs_per_psi}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    probs = np.column_stack([psi_arr ** 2, 2.0 * psi_arr * (1.0 - psi_arr), (1.0 - psi_arr) ** 2])
    probs /= probs.sum(axis=1, keepdims=True)
    counts = rng.multinomial(pairs_per_psi, probs).sum(axis=0)
    C, D, U = (int(v) for v in counts)
    return TwinCohort.of(C=C, D_discordant=D, U=U)


def covariance_pair(pop: LatentPopulation) -> Tuple[np.ndarray, np.ndarray]:
    """Cell-count covariances of one draw per individual versus n draws at the mean cells.

    Sigma_gpb sums per-individual multinomial(1, q_i) covariances; Sigma_mult is the
    multinomial(n, mean q) covariance.
    """
    if not pop.is_null:
        raise DomainError("covariance comparison applies to null populations only")
    q = cell_moments(pop)
    n = q.shape[0]
    sigma_gpb = np.diag(q.sum(axis=0)) - q.T @ q
    q_bar = q.mean(axis=0)
    sigma_mult = n * (np.diag(q_bar) - np.outer(q_bar, q_bar))
    return sigma_gpb, sigma_mult


def loewner_gap(pop: LatentPopulation) -> float:
    # Smallest eigenvalue of Sigma_mult - Sigma_gpb; nonnegative when the multinomial is conservative
    sigma_gpb, sigma_mult = covariance_pair(pop)
    return float(np.linalg.eigvalsh(sigma_mult - sigma_gpb).min())


def is_diagonally_dominant(M: np.ndarray, slack: float = PSD_SLACK) -> bool:
    M = np.asarray(M, dtype=float)
    diag = np.abs(np.diag(M))
    off = np.abs(M).sum(axis=1) - diag
    return bool(np.all(diag + slack >= off))


def coverage_rate(
    pop: LatentPopulation,
    replications: int,
    cutoff: float,
    rng: np.random.Generator,
) -> float:
    """Share of simulated tables whose quadratic form at the true expected cells is below `cutoff`.

    Each replication draws one (e, d) outcome per individual; tables with an empty cell are
    counted as misses.
    """
    pi, r = pop.pi, pop.r
    n = pop.size
    truth = n * np.asarray(expected_cells(pop).cells())
    hits = 0
    for _ in range(replications):
        e = rng.random(n) < pi
        d = rng.random(n) < r
        x = Counts2x2(
            x01=int(np.sum(~e & d)),
            x11=int(np.sum(e & d)),
            x00=int(np.sum(~e & ~d)),
            x10=int(np.sum(e & ~d)),
        )
        if x.has_zero_cell():
            continue
        pinv = multinomial_covariance(x).pinv
        observed = np.asarray(x.cells(), dtype=float)
        if float(quadratic_form(truth, observed, pinv)[0]) < cutoff:
            hits += 1
    return hits / replications


def multinomial_coverage_rate(
    p: Probs2x2,
    n: int,
    replications: int,
    cutoff: float,
    rng: np.random.Generator,
) -> float:
    # Same statistic for plain multinomial sampling at cell probabilities p
    truth = n * np.asarray(p.cells())
    draws = rng.multinomial(n, np.asarray(p.cells()), size=replications)
    hits = 0
    for row in draws:
        x = Counts2x2.of(row)
        if x.has_zero_cell():
            continue
        if float(quadratic_form(truth, row.astype(float), multinomial_covariance(x).pinv)[0]) < cutoff:
            hits += 1
    return hits / replications
