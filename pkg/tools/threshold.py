from __future__ import annotations

import logging
import math

from schemas.errors import DomainError, Infeasible, ZeroThreshold
from schemas.results import ThresholdResult, ThresholdSource
from schemas.tables import AssociationKind, MarginalSummary, Probs2x2
from tools.tables import phi

logger = logging.getLogger(__name__)

# Smallest cell probability a reconstructed table may carry
CELL_FLOOR = 1e-12


def _clip_unit(x: float) -> float:
    return min(1.0, max(0.0, x))


def threshold_T(p: Probs2x2) -> ThresholdResult:
    """Threshold of sufficient randomness of an observed table, T = 1 - |phi|."""
    value = phi(p)
    return ThresholdResult(T=_clip_unit(1.0 - abs(value)), phi_used=value, source=ThresholdSource.FROM_TABLE)


def lambda_ratio(p_e: float, p_d: float) -> float:
    if not (0.0 < p_e < 1.0 and 0.0 < p_d < 1.0):
        raise DomainError(f"prevalences must lie in (0, 1), got p_e={p_e}, p_d={p_d}")
    return math.sqrt(p_e * (1.0 - p_e) / (p_d * (1.0 - p_d)))


def rr_from_or(p_e: float, p_d: float, odds_ratio: float) -> float:
    """Relative risk implied by an odds ratio at the given prevalences.

    Positive root of p_e*u^2 + a*u + m = 0; it is the root that gives RR = 1 at OR = 1.
    """
    if odds_ratio <= 0.0:
        raise Infeasible(f"odds ratio must be positive, got {odds_ratio}")
    a = p_d * (odds_ratio - 1.0) + (1.0 - p_e) - p_e * odds_ratio
    m = (p_e - 1.0) * odds_ratio
    # a^2 - 4*p_e*m rewritten in its nonnegative form
    disc = a * a + 4.0 * p_e * (1.0 - p_e) * odds_ratio
    if disc < 0.0:
        raise DomainError(f"negative discriminant {disc!r}")
    root = math.sqrt(disc)
    if a > 0.0:
        # Same root without the cancellation in -a + sqrt(disc)
        return -2.0 * m / (a + root)
    return (-a + root) / (2.0 * p_e)


def _risk_difference(m: MarginalSummary) -> float:
    """Risk difference implied by any supported measure; phi maps to RD through lambda."""
    if m.kind is AssociationKind.RD:
        return m.value
    if m.kind is AssociationKind.PHI:
        return m.value / lambda_ratio(m.p_e, m.p_d)
    if m.kind is AssociationKind.OR:
        rr = rr_from_or(m.p_e, m.p_d, m.value)
    else:
        rr = m.value
        if rr <= 0.0:
            raise Infeasible(f"relative risk must be positive, got {rr}")
    return m.p_d * (rr - 1.0) / (1.0 + m.p_e * (rr - 1.0))


def cells_from_measure(m: MarginalSummary) -> Probs2x2:
    """Reconstruct the table implied by (p_e, p_d, measure); Infeasible if a cell is not positive."""
    rd = _risk_difference(m)
    p11 = m.p_e * m.p_d + rd * m.p_e * (1.0 - m.p_e)
    p01 = m.p_d - p11
    p10 = m.p_e - p11
    p00 = 1.0 - m.p_e - p01
    cells = (p01, p11, p00, p10)
    if min(cells) <= CELL_FLOOR:
        raise Infeasible(
            f"(p_e={m.p_e}, p_d={m.p_d}, {m.kind.value}={m.value}) implies cells {cells}; "
            "at least one is not positive"
        )
    # Renormalise away the last ulp so the simplex check is exact
    total = sum(cells)
    return Probs2x2(p01=p01 / total, p11=p11 / total, p00=p00 / total, p10=p10 / total)


def threshold_from_measure(m: MarginalSummary) -> ThresholdResult:
    """T from prevalences and one measure of association, per the matching branch."""
    lam = lambda_ratio(m.p_e, m.p_d)
    if m.kind is AssociationKind.PHI:
        phi_used = m.value
    else:
        phi_used = _risk_difference(m) * lam
    return ThresholdResult(
        T=_clip_unit(1.0 - abs(phi_used)),
        phi_used=phi_used,
        source=ThresholdSource.FROM_MEASURE,
        measure=m.kind,
    )


def ample_randomness_ratio(l_eta: float, t: ThresholdResult | float) -> float:
    # Values above 1 mean the lower bound on eta already clears the threshold
    T = t.T if isinstance(t, ThresholdResult) else float(t)
    if T <= 0.0:
        raise ZeroThreshold("threshold is 0; the ratio is undefined")
    return l_eta / T
