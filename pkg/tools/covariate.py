from __future__ import annotations

import logging
import math
from typing import List, Tuple

import numpy as np

from schemas.errors import DegenerateStratum, DomainError, Infeasible
from schemas.results import StratumBounds, TauProblem, TauSolution
from schemas.tables import StratifiedTable
from tools.tables import phi_cells
from tools.tau_solver import ReducedProblem, solve_branch_and_bound, solve_grid

logger = logging.getLogger(__name__)

DEFAULT_TAU_TOL = 1e-4
FEASIBILITY_SLACK = 1e-10
GRID_MAX_STRATA = 4


def _stratum_bounds(label: str, weight: float, cells: Tuple[int, int, int, int]) -> StratumBounds:
    x01, x11, x00, x10 = (float(c) for c in cells)
    n = x01 + x11 + x00 + x10
    p_e = (x11 + x10) / n
    p_d = (x01 + x11) / n
    if not (0.0 < p_e < 1.0 and 0.0 < p_d < 1.0):
        raise DegenerateStratum(label, f"P(e=1|c)={p_e:.4g}, P(d=1|c)={p_d:.4g}")

    # Conditionals of e given d, and of d given e, within the stratum
    e_given_d1 = x11 / (x01 + x11)
    e_given_d0 = x10 / (x00 + x10)
    d_given_e1 = x11 / (x11 + x10)
    d_given_e0 = x01 / (x01 + x00)

    var_e_c = p_e * (1.0 - p_e)
    var_d_c = p_d * (1.0 - p_d)
    l2_pi = p_d * (e_given_d1 - p_e) ** 2 + (1.0 - p_d) * (e_given_d0 - p_e) ** 2
    l2_r = p_e * (d_given_e1 - p_d) ** 2 + (1.0 - p_e) * (d_given_e0 - p_d) ** 2
    phi_c = float(phi_cells(x01, x11, x00, x10))

    b = StratumBounds(
        label=label,
        weight=weight,
        phi2_c=phi_c * phi_c,
        var_e_c=var_e_c,
        var_d_c=var_d_c,
        l2_pi=l2_pi,
        u2_pi=var_e_c,
        l2_r=l2_r,
        u2_r=var_d_c,
    )
    if not (b.l2_pi * b.l2_r - FEASIBILITY_SLACK <= b.k <= b.u2_pi * b.u2_r + FEASIBILITY_SLACK):
        raise Infeasible(
            f"stratum {label!r}: hyperbola constant {b.k:.6g} misses "
            f"[{b.l2_pi * b.l2_r:.6g}, {b.u2_pi * b.u2_r:.6g}]"
        )
    return b


def build_problem(s: StratifiedTable) -> TauProblem:
    """Per-stratum variance bounds plus the between-stratum variances A and B."""
    weights = s.weights
    strata = [_stratum_bounds(st.label, w, st.counts.cells()) for st, w in zip(s.strata, weights)]

    overall = s.marginal()
    p_e = overall.exposed / overall.n
    p_d = (overall.x01 + overall.x11) / overall.n
    A = B = 0.0
    for st, w in zip(s.strata, weights):
        c = st.counts
        A += w * (c.exposed / c.n - p_e) ** 2
        B += w * ((c.x01 + c.x11) / c.n - p_d) ** 2
    return TauProblem(
        strata=strata,
        A=A,
        B=B,
        var_e=p_e * (1.0 - p_e),
        var_d=p_d * (1.0 - p_d),
    )


def feasible_interval(b: StratumBounds) -> Tuple[float, float]:
    # x range on which k/x stays inside [l2_r, u2_r]
    k = b.k
    lo = max(b.l2_pi, k / b.u2_r)
    hi = min(b.u2_pi, k / b.l2_r) if b.l2_r > 0.0 else b.u2_pi
    if lo > hi:
        if lo - hi > FEASIBILITY_SLACK:
            raise Infeasible(f"stratum {b.label!r}: empty interval [{lo:.6g}, {hi:.6g}]")
        lo = hi = 0.5 * (lo + hi)
    return lo, hi


def _reduce(p: TauProblem) -> Tuple[ReducedProblem, List[int], List[Tuple[float, float]]]:
    """Split strata into free coordinates and pinned ones folded into A and B."""
    A, B = p.A, p.B
    free: List[int] = []
    m, k, lo, hi = [], [], [], []
    pinned: List[Tuple[float, float]] = []
    for b in p.strata:
        if b.k <= 0.0:
            # k = 0 leaves the objective increasing in both variances: both sit at their lower bounds
            pinned.append((b.l2_pi, b.l2_r))
            A += b.weight * b.l2_pi
            B += b.weight * b.l2_r
            continue
        x_lo, x_hi = feasible_interval(b)
        free.append(len(pinned))
        pinned.append((math.nan, math.nan))
        m.append(b.weight)
        k.append(b.k)
        lo.append(x_lo)
        hi.append(x_hi)
    reduced = ReducedProblem(
        A=A,
        B=B,
        m=np.asarray(m, dtype=float),
        k=np.asarray(k, dtype=float),
        lo=np.asarray(lo, dtype=float),
        hi=np.asarray(hi, dtype=float),
    )
    return reduced, free, pinned


def solve_tau(p: TauProblem, tol: float = DEFAULT_TAU_TOL) -> TauSolution:
    """Minimise (A + sum m x)(B + sum m y) over x*y = k inside each stratum's box.

    Up to four free strata use exhaustive grid refinement, more use branch and bound. Both
    return a gap certified by interval lower bounds.
    """
    if tol <= 0.0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    reduced, free, variances = _reduce(p)

    if reduced.dim == 0:
        x, tau, gap, method = np.zeros(0), reduced.A * reduced.B, 0.0, "closed-form"
    elif reduced.dim <= GRID_MAX_STRATA:
        x, tau, gap = solve_grid(reduced, tol)
        method = "grid"
    else:
        x, tau, gap = solve_branch_and_bound(reduced, tol)
        method = "branch-and-bound"

    for j, idx in enumerate(free):
        variances[idx] = (float(x[j]), float(reduced.k[j] / x[j]))
    tau = max(0.0, float(tau))
    T_c = 1.0 - math.sqrt(tau) / math.sqrt(p.var_e * p.var_d)
    logger.debug("tau=%.6g T_c=%.6f gap=%.3g via %s over %d strata", tau, T_c, gap, method, len(p.strata))
    return TauSolution(tau=tau, variances=variances, T_c=T_c, solver_gap=gap, method=method, problem=p)


def threshold_Tc(s: StratifiedTable, tol: float = DEFAULT_TAU_TOL) -> TauSolution:
    """Covariate-adjusted threshold: build_problem then solve_tau."""
    solution = solve_tau(build_problem(s), tol)
    logger.info("T_c=%.4f over %d strata", solution.T_c, len(s.strata))
    return solution
