from __future__ import annotations

import time

from schemas.errors import DomainError, ObsCausalError
from schemas.state import CausalityState
from stages.observability import record
from tools.finitepop import fpc_threshold


def run_finite_population(state: CausalityState) -> CausalityState:
    t0 = time.time()  # Start latency measurement
    try:
        if state.counts is None or state.resample is None:
            raise DomainError("finite-population correction needs observed counts")
        result = fpc_threshold(state.counts, state.resample)
    except ObsCausalError as exc:
        record(state, "finite_population", t0, exc)
        raise

    state.fpc = result
    state.log(
        "finite_population",
        f"resampled {state.resample.num_samples} tables (seed {state.resample.seed})",
        f"T_n={result.T_n:.4f}, accepted={result.accepted_count}",
    )
    record(state, "finite_population", t0)
    return state
