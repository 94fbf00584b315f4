from __future__ import annotations

import logging
import time
from typing import Optional

from schemas.errors import ObsCausalError
from schemas.evidence import ConcordanceInput
from schemas.state import CausalityState
from stages.observability import record
from tools.randomness import lower_bound_eta

logger = logging.getLogger(__name__)


def _check_override(state: CausalityState, trait: str, given: ConcordanceInput, table: Optional[float]) -> None:
    # An override far from the observed prevalence usually means the twin study's population differs
    if given.prevalence is None or table is None:
        return
    if abs(given.prevalence - table) > state.prevalence_tolerance:
        msg = (
            f"{trait} prevalence override {given.prevalence:.4f} differs from the table's "
            f"{table:.4f} by more than {state.prevalence_tolerance}"
        )
        logger.warning(msg)
        state.notes.append(msg)


def run_randomness(state: CausalityState) -> CausalityState:
    t0 = time.time()  # Start latency measurement
    if state.exposure is None or state.outcome is None:
        state.log("randomness", "skipped lower bound", "evidence missing")
        record(state, "randomness", t0)
        return state

    try:
        _check_override(state, "exposure", state.exposure, state.p_e)
        _check_override(state, "outcome", state.outcome, state.p_d)
        bound = lower_bound_eta(state.exposure.resolve(state.p_e), state.outcome.resolve(state.p_d))
    except ObsCausalError as exc:
        record(state, "randomness", t0, exc)
        raise

    state.randomness = bound
    state.log("randomness", "bounded eta from twin concordances", f"l_eta={bound.l_eta:.4f}")
    record(state, "randomness", t0)
    return state
