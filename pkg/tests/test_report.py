import json

from app.report import SCHEMA_ID, build_report, dumps, human_summary
from schemas.evidence import ConcordanceInput
from schemas.state import CausalityState
from stages.graph import run_analysis


def test_report_sections_in_fixed_order(copd):
    result = run_analysis(CausalityState(counts=copd))
    report = build_report(result, {"table": list(copd.cells())})
    assert list(report) == [
        "schema", "command", "inputs", "threshold", "finite_population",
        "covariate", "randomness", "verdict", "notes",
    ]
    assert report["schema"] == SCHEMA_ID
    assert report["finite_population"] is None
    assert report["threshold"]["measures"]["RR"] > 1.0


def test_dumps_is_stable_json(copd):
    state = CausalityState(
        counts=copd,
        exposure=ConcordanceInput(value=0.67, prevalence=0.65),
        outcome=ConcordanceInput(value=0.20, prevalence=0.14),
    )
    first = dumps(build_report(run_analysis(state), {}))
    second = dumps(build_report(run_analysis(state.model_copy(deep=True)), {}))
    assert first == second
    assert json.loads(first)["verdict"]["verdict"] == "Warranted"
    assert "latency" not in first


def test_human_summary_mentions_verdict(copd):
    text = human_summary(run_analysis(CausalityState(counts=copd)))
    assert text.startswith("T = 0.84")
    assert "verdict: Indeterminate" in text
