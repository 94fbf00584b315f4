from __future__ import annotations

import time
from typing import Optional

from schemas.errors import ZeroThreshold
from schemas.state import CausalityState, Verdict
from stages.observability import record
from tools.threshold import ample_randomness_ratio

# Added to every report: what the comparison of l_eta with the threshold rests on
ASSUMPTIONS = [
    "SUTVA: potential-outcome parameters are stable across individuals and studies",
    "twin transport: chance concordance L does not exceed observed concordance V in the twin population",
]


def _select_threshold(state: CausalityState) -> None:
    # The most refined threshold computed applies: T_c, then T_n, then T
    if state.tau is not None:
        state.applicable, state.applicable_threshold = "T_c", state.tau.T_c
    elif state.fpc is not None:
        state.applicable, state.applicable_threshold = "T_n", state.fpc.T_n
    elif state.threshold is not None:
        state.applicable, state.applicable_threshold = "T", state.threshold.T


def _ratio(l_eta: float, threshold: float) -> Optional[float]:
    try:
        return ample_randomness_ratio(l_eta, threshold)
    except ZeroThreshold:
        return None


def run_verdict(state: CausalityState) -> CausalityState:
    t0 = time.time()  # Start latency measurement
    _select_threshold(state)
    for note in ASSUMPTIONS:
        if note not in state.notes:
            state.notes.append(note)

    if state.randomness is None or state.applicable_threshold is None:
        state.verdict = Verdict.INDETERMINATE
        state.log("verdict", "compared l_eta with threshold", "indeterminate: input missing")
        record(state, "verdict", t0)
        return state

    l_eta = state.randomness.l_eta
    threshold = state.applicable_threshold
    state.verdict = Verdict.WARRANTED if l_eta > threshold else Verdict.NOT_WARRANTED
    state.ample_ratio = _ratio(l_eta, threshold)
    if state.applicable != "T" and state.threshold is not None:
        state.ample_ratio_marginal = _ratio(l_eta, state.threshold.T)
    if state.ample_ratio is None:
        state.notes.append("threshold is 0; ample-randomness ratio undefined")

    state.log(
        "verdict",
        f"compared l_eta={l_eta:.4f} with {state.applicable}={threshold:.4f}",
        state.verdict.value,
    )
    record(state, "verdict", t0)
    return state
