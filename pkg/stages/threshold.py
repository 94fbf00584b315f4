from __future__ import annotations

import logging
import time

from schemas.errors import DomainError, ObsCausalError
from schemas.state import CausalityState
from stages.observability import record
from tools.tables import from_counts, haldane, measures
from tools.threshold import cells_from_measure, threshold_from_measure, threshold_T

logger = logging.getLogger(__name__)


def run_threshold(state: CausalityState) -> CausalityState:
    t0 = time.time()  # Start latency measurement
    try:
        if state.stratified is not None and state.counts is None:
            state.counts = state.stratified.marginal()  # Marginal table behind the strata

        if state.counts is not None:
            probs = haldane(state.counts) if state.haldane else from_counts(state.counts)
            result = threshold_T(probs)
            source = "haldane-corrected table" if state.haldane else "table"
        elif state.summary is not None:
            result = threshold_from_measure(state.summary)
            probs = cells_from_measure(state.summary)
            source = f"{state.summary.kind.value} summary"
        else:
            raise DomainError("nothing to compute a threshold from: give a table, strata or a summary")
    except ObsCausalError as exc:
        record(state, "threshold", t0, exc)
        raise

    state.threshold = result
    state.p_e, state.p_d = probs.p_e, probs.p_d
    state.measures = measures(probs)._asdict()
    state.log("threshold", f"computed T from {source}", f"T={result.T:.4f}, phi={result.phi_used:.4f}")
    record(state, "threshold", t0)
    return state


def route_after_threshold(state: CausalityState) -> str:
    # Route to the refinement the inputs ask for; plain tests go straight to randomness
    if state.resample is not None:
        return "finite_population"
    if state.stratified is not None:
        return "covariate"
    return "randomness"
