from __future__ import annotations

import logging
import time

from schemas.errors import DomainError, ObsCausalError
from schemas.state import CausalityState
from stages.observability import record
from tools.covariate import threshold_Tc
from tools.tables import adjusted_rr

logger = logging.getLogger(__name__)


def run_covariate(state: CausalityState) -> CausalityState:
    t0 = time.time()  # Start latency measurement
    try:
        if state.stratified is None:
            raise DomainError("covariate adjustment needs a stratified table")
        solution = threshold_Tc(state.stratified, state.tau_tol)
    except ObsCausalError as exc:
        record(state, "covariate", t0, exc)
        raise

    state.tau = solution
    try:
        state.adjusted_rr = adjusted_rr(state.stratified)
    except ObsCausalError as exc:
        # The pooled RR is a companion statistic; T_c stands without it
        logger.warning("adjusted relative risk unavailable: %s", exc)
        state.notes.append(f"adjusted relative risk unavailable: {exc}")

    state.log(
        "covariate",
        f"solved tau over {len(state.stratified.strata)} strata ({solution.method})",
        f"T_c={solution.T_c:.4f}, gap={solution.solver_gap:.2g}",
    )
    record(state, "covariate", t0)
    return state
