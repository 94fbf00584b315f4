from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import NamedTuple, Sequence, Union

from schemas.errors import DomainError, InconsistentEvidence, NoTraitPresent
from schemas.evidence import ConcordanceEvidence, ConcordanceKind, RandomnessBound, TwinCohort

logger = logging.getLogger(__name__)

# Radicands in [-RADICAND_SLACK, 0) are treated as floating-point noise and clipped to 0
RADICAND_SLACK = 1e-9

Number = Union[float, Fraction]


class CohortStatistics(NamedTuple):
    BC: Number
    PC: Number
    V: Number
    psi_bar: Number


def pairwise_to_probandwise(PC: Number) -> Number:
    """BC = 2PC / (1 + PC), so that 1 - BC = (1 - PC) / (1 + PC).

    Exact when PC is a Fraction.
    """
    if not (0 <= PC <= 1):
        raise DomainError(f"pairwise concordance must lie in [0, 1], got {PC}")
    return 2 * PC / (1 + PC)


def _discordance(ev: ConcordanceEvidence) -> float:
    # 1 - BC, written in terms of whichever concordance the evidence carries
    if ev.kind is ConcordanceKind.PAIRWISE:
        return (1.0 - ev.value) / (1.0 + ev.value)
    return 1.0 - ev.value


def r_squared_upper_bound(ev: ConcordanceEvidence) -> float:
    """Upper bound on the normalised propensity variance of one trait.

    R^2 <= 1 - (1 - BC) / (1 - prevalence); assumes concordance among twins is at least the
    chance level L implied by individual propensities (untestable from the observed table).
    """
    bound = 1.0 - _discordance(ev) / (1.0 - ev.prevalence)
    if bound < 0.0:
        if bound < -RADICAND_SLACK:
            raise InconsistentEvidence(
                f"{ev.kind.value} concordance {ev.value} is below what prevalence "
                f"{ev.prevalence} implies (bound {bound:.6g} < 0)"
            )
        logger.warning("clipping radicand %.3g to 0 (concordance %s)", bound, ev.value)
        bound = 0.0
    return bound


def lower_bound_eta(exposure: ConcordanceEvidence, outcome: ConcordanceEvidence) -> RandomnessBound:
    """Empirical lower bound l_eta = 1 - sqrt(R2_pi upper) * sqrt(R2_r upper).

    Each trait may use its own concordance kind; the bound factors per trait.
    """
    r2_pi = r_squared_upper_bound(exposure)
    r2_r = r_squared_upper_bound(outcome)
    l_eta = 1.0 - math.sqrt(r2_pi) * math.sqrt(r2_r)
    logger.debug("l_eta=%.6f from R2_pi<=%.6f, R2_r<=%.6f", l_eta, r2_pi, r2_r)
    return RandomnessBound(
        l_eta=min(1.0, max(0.0, l_eta)),
        r2_pi_upper=r2_pi,
        r2_r_upper=r2_r,
        exposure=exposure,
        outcome=outcome,
    )


def cohort_statistics(t: TwinCohort, exact: bool = False) -> CohortStatistics:
    C, D, U, n = t.C, t.D_discordant, t.U, t.n
    if C + D == 0:
        raise NoTraitPresent("no twin carries the trait; concordance is undefined")
    if exact:
        C, D, U, n = Fraction(C), Fraction(D), Fraction(U), Fraction(n)
    else:
        C, D, U, n = float(C), float(D), float(U), float(n)
    return CohortStatistics(
        BC=2 * C / (2 * C + D),
        PC=C / (C + D),
        V=(U + C) / n,
        psi_bar=(C + D / 2) / n,
    )


def _mean(values: Sequence[Number]) -> Number:
    return sum(values) / len(values)


def r_squared_direct(psi: Sequence[Number]) -> Number:
    """Population variance of individual trait propensities over its Bernoulli maximum."""
    if not psi:
        raise DomainError("need at least one propensity")
    psi_bar = _mean(psi)
    if not (0 < psi_bar < 1):
        raise DomainError(f"mean propensity must be interior, got {psi_bar}")
    var = _mean([(p - psi_bar) ** 2 for p in psi])
    return var / (psi_bar * (1 - psi_bar))


def r_squared_from_concordance_level(psi: Sequence[Number]) -> Number:
    """Same quantity through the chance concordance L = mean(psi^2 + (1 - psi)^2)."""
    psi_bar = _mean(psi)
    L = _mean([p ** 2 + (1 - p) ** 2 for p in psi])
    return 1 - (1 - L) / (2 * psi_bar * (1 - psi_bar))
