"""Machine-readable report (JSON on stdout) and the human summary (stderr).

The report holds no timestamps, latencies or log text, so identical inputs and seed give
byte-identical output. Key order is fixed by construction.
"""

from __future__ import annotations

import json
import math
from typing import Any, Dict, List, Optional

from schemas.results import SuiteReport
from schemas.state import CausalityState

SCHEMA_ID = "obscausal.report/1"
VERIFY_SCHEMA_ID = "obscausal.verify/1"


def _num(x: Optional[float]) -> Optional[float]:
    # JSON has no NaN/inf; those become null
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _threshold_section(state: CausalityState) -> Optional[Dict[str, Any]]:
    t = state.threshold
    if t is None:
        return None
    return {
        "T": _num(t.T),
        "phi": _num(t.phi_used),
        "source": t.source.value,
        "measure": t.measure.value if t.measure is not None else None,
        "p_e": _num(state.p_e),
        "p_d": _num(state.p_d),
        "measures": {k: _num(v) for k, v in state.measures.items()},
    }


def _fpc_section(state: CausalityState) -> Optional[Dict[str, Any]]:
    f = state.fpc
    if f is None:
        return None
    return {
        "T_point": _num(f.T_point),
        "T_n": _num(f.T_n),
        "confidence": _num(1.0 - f.config.alpha),
        "quantile_alt": _num(f.quantile_alt),
        "se_alt": _num(f.se_alt),
        "accepted_count": f.accepted_count,
        "degenerate_count": f.degenerate_count,
        "chi2_cutoff": _num(f.chi2_cutoff),
        "config": {
            "alpha": _num(f.config.alpha),
            "num_samples": f.config.num_samples,
            "seed": f.config.seed,
            "workers": f.config.workers,
        },
    }


def _covariate_section(state: CausalityState) -> Optional[Dict[str, Any]]:
    sol = state.tau
    if sol is None:
        return None
    strata: List[Dict[str, Any]] = []
    for b, (x, y) in zip(sol.problem.strata, sol.variances):
        phi_c = math.sqrt(b.phi2_c)
        strata.append({
            "label": b.label,
            "weight": _num(b.weight),
            "abs_phi": _num(phi_c),
            "T_stratum": _num(1.0 - phi_c),
            "var_pi_bounds": [_num(b.l2_pi), _num(b.u2_pi)],
            "var_r_bounds": [_num(b.l2_r), _num(b.u2_r)],
            "var_pi": _num(x),
            "var_r": _num(y),
        })
    return {
        "T_c": _num(sol.T_c),
        "tau": _num(sol.tau),
        "solver_gap": _num(sol.solver_gap),
        "method": sol.method,
        "A": _num(sol.problem.A),
        "B": _num(sol.problem.B),
        "adjusted_rr": _num(state.adjusted_rr),
        "strata": strata,
    }


def _randomness_section(state: CausalityState) -> Optional[Dict[str, Any]]:
    r = state.randomness
    if r is None:
        return None

    def evidence(ev) -> Dict[str, Any]:
        return {"kind": ev.kind.value, "value": _num(ev.value), "prevalence": _num(ev.prevalence)}

    return {
        "l_eta": _num(r.l_eta),
        "r2_pi_upper": _num(r.r2_pi_upper),
        "r2_r_upper": _num(r.r2_r_upper),
        "exposure": evidence(r.exposure),
        "outcome": evidence(r.outcome),
    }


def build_report(state: CausalityState, inputs: Dict[str, Any]) -> Dict[str, Any]:
    report: Dict[str, Any] = {
        "schema": SCHEMA_ID,
        "command": state.command,
        "inputs": inputs,
        "threshold": _threshold_section(state),
        "finite_population": _fpc_section(state),
        "covariate": _covariate_section(state),
        "randomness": _randomness_section(state),
        "verdict": {
            "verdict": state.verdict.value if state.verdict is not None else None,
            "applicable": state.applicable,
            "threshold": _num(state.applicable_threshold),
            "l_eta": _num(state.randomness.l_eta) if state.randomness is not None else None,
            "ample_ratio": _num(state.ample_ratio),
            "ample_ratio_marginal": _num(state.ample_ratio_marginal),
        },
        "notes": list(state.notes),
    }
    return report


def build_verify_report(suite: SuiteReport) -> Dict[str, Any]:
    return {
        "schema": VERIFY_SCHEMA_ID,
        "seed": suite.seed,
        "intensity": suite.intensity,
        "passed": suite.passed,
        "checks": [
            {
                "name": c.name,
                "ok": c.ok,
                "cases": c.cases,
                "failures": c.failures,
                "first_failure": c.first_failure,
                "diagnostics": {k: _num(v) for k, v in c.diagnostics.items()},
            }
            for c in suite.checks
        ],
    }


def dumps(report: Dict[str, Any]) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def human_summary(state: CausalityState) -> str:
    lines: List[str] = []
    if state.threshold is not None:
        lines.append(f"T = {state.threshold.T:.4f} (phi = {state.threshold.phi_used:+.4f})")
    if state.fpc is not None:
        f = state.fpc
        lines.append(
            f"T_n({1.0 - f.config.alpha:.2f}) = {f.T_n:.4f}; quantile alt {f.quantile_alt:.4f}, "
            f"se alt {f.se_alt:.4f}; {f.accepted_count} accepted, seed {f.config.seed}"
        )
    if state.tau is not None:
        lines.append(f"T_c = {state.tau.T_c:.4f} ({state.tau.method}, gap {state.tau.solver_gap:.2g})")
        if state.adjusted_rr is not None:
            lines.append(f"Mantel-Haenszel RR = {state.adjusted_rr:.4f}")
    if state.randomness is not None:
        lines.append(f"l_eta = {state.randomness.l_eta:.4f}")
    if state.verdict is not None:
        lines.append(f"verdict: {state.verdict.value}")
    for entry in state.trace:
        lines.append(f"  [{entry.stage}] {entry.action}: {entry.outcome}")
    for obs in state.meta.get("observability", []):
        lines.append(f"  ({obs['stage']} {obs['latency_s']}s)")
    for note in state.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"
