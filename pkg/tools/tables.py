from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np
from statsmodels.stats.contingency_tables import StratifiedTable as SMStratifiedTable

from schemas.errors import DegenerateMarginal, DegenerateStratum, DomainError, ZeroCell
from schemas.tables import Counts2x2, Probs2x2, StratifiedTable

logger = logging.getLogger(__name__)


class Measures(NamedTuple):
    RD: float
    RR: float
    OR: float


def from_counts(c: Counts2x2) -> Probs2x2:
    if c.has_zero_cell():
        raise ZeroCell(f"table {c.cells()} has an empty cell")
    n = c.n
    return Probs2x2(p01=c.x01 / n, p11=c.x11 / n, p00=c.x00 / n, p10=c.x10 / n)


def haldane(c: Counts2x2) -> Probs2x2:
    # Add 0.5 to every cell so tables with empty cells still have a threshold
    n = c.n + 2.0
    return Probs2x2(p01=(c.x01 + 0.5) / n, p11=(c.x11 + 0.5) / n, p00=(c.x00 + 0.5) / n, p10=(c.x10 + 0.5) / n)


def phi_cells(x01, x11, x00, x10):
    """Vectorised phi coefficient over (possibly unnormalised) cell arrays.

    Returns NaN wherever a marginal is degenerate.
    """
    x01, x11, x00, x10 = (np.asarray(v, dtype=float) for v in (x01, x11, x00, x10))
    denom = ((x11 + x10) * (x01 + x00)) * ((x01 + x11) * (x00 + x10))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (x11 * x00 - x01 * x10) / np.sqrt(denom)
    return np.where(denom > 0, out, np.nan)


def phi(p: Probs2x2) -> float:
    p_e, p_d = p.p_e, p.p_d
    if not (0.0 < p_e < 1.0 and 0.0 < p_d < 1.0):
        raise DegenerateMarginal(f"marginals must be interior, got p_e={p_e}, p_d={p_d}")
    # Written symmetric in the exposure labels so that relabelling negates phi exactly
    e1, e0 = p.p11 + p.p10, p.p01 + p.p00
    d1, d0 = p.p01 + p.p11, p.p00 + p.p10
    return (p.p11 * p.p00 - p.p01 * p.p10) / math.sqrt((e1 * e0) * (d1 * d0))


def measures(p: Probs2x2) -> Measures:
    risk_exposed = p.p11 / (p.p11 + p.p10)
    risk_unexposed = p.p01 / (p.p01 + p.p00)
    return Measures(
        RD=risk_exposed - risk_unexposed,
        RR=risk_exposed / risk_unexposed,
        OR=(p.p11 * p.p00) / (p.p10 * p.p01),
    )


def adjusted_rr(s: StratifiedTable) -> float:
    """Mantel-Haenszel pooled relative risk across strata."""
    layers = []
    for stratum in s.strata:
        c = stratum.counts
        if c.exposed == 0 or c.unexposed == 0:
            raise DegenerateStratum(stratum.label, "no exposed or no unexposed subjects")
        # statsmodels layout: rows exposed/unexposed, columns outcome yes/no
        layers.append([[c.x11, c.x10], [c.x01, c.x00]])
    if sum(st.counts.x01 * st.counts.exposed for st in s.strata) == 0:
        raise DomainError("no unexposed cases in any stratum; pooled relative risk is unbounded")

    pooled = SMStratifiedTable(np.asarray(layers, dtype=float).transpose(1, 2, 0))
    rr = float(pooled.riskratio_pooled)
    logger.debug("Mantel-Haenszel RR over %d strata: %.6f", len(s.strata), rr)
    return rr
