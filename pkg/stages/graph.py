from __future__ import annotations

from typing import Any

from langgraph.graph import END, StateGraph

from schemas.state import CausalityState
from stages.covariate import run_covariate
from stages.finite_population import run_finite_population
from stages.randomness import run_randomness
from stages.threshold import route_after_threshold, run_threshold
from stages.verdict import run_verdict


def build_graph():
    graph = StateGraph(CausalityState)

    # Register workflow nodes
    graph.add_node("threshold", run_threshold)
    graph.add_node("finite_population", run_finite_population)
    graph.add_node("covariate", run_covariate)
    graph.add_node("randomness", run_randomness)
    graph.add_node("verdict", run_verdict)

    # Define execution flow
    graph.set_entry_point("threshold")
    graph.add_conditional_edges(
        "threshold",
        route_after_threshold,
        {
            "finite_population": "finite_population",
            "covariate": "covariate",
            "randomness": "randomness",
        },
    )
    graph.add_edge("finite_population", "randomness")
    graph.add_edge("covariate", "randomness")
    graph.add_edge("randomness", "verdict")
    graph.add_edge("verdict", END)

    return graph.compile()


def _ensure_state(x: Any) -> CausalityState:
    # Ensure the result is returned as CausalityState
    if isinstance(x, CausalityState):
        return x
    if isinstance(x, dict):
        return CausalityState(**x)
    raise TypeError(f"Unexpected state type: {type(x)}")


def run_analysis(state: CausalityState) -> CausalityState:
    app = build_graph()
    return _ensure_state(app.invoke(state))
