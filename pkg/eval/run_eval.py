import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# Ensure project root is available in Python path when running this file directly
sys.path.append(str(Path(__file__).resolve().parents[1]))

from app.report import build_report
from schemas.evidence import ConcordanceInput
from schemas.results import ResampleConfig
from schemas.state import CausalityState
from schemas.tables import Counts2x2, MarginalSummary, StratifiedTable
from stages.graph import run_analysis


TEST_FILE = Path(__file__).parent / "test_cases.json"  # Published tables and the numbers they should give


# ----------------------------
# Utility Functions
# ----------------------------
def build_state(case: Dict[str, Any]) -> CausalityState:
    # Translate a case definition into workflow inputs
    fields: Dict[str, Any] = {"command": "eval"}
    if "table" in case:
        fields["counts"] = Counts2x2.of(case["table"])
    if "summary" in case:
        fields["summary"] = MarginalSummary(**case["summary"])
    if "strata" in case:
        fields["stratified"] = StratifiedTable.of(case["strata"])
    if "resample" in case:
        fields["resample"] = ResampleConfig(**case["resample"])
    for trait in ("exposure", "outcome"):
        if trait in case:
            fields[trait] = ConcordanceInput(**case[trait])
    return CausalityState(**fields)


def lookup(report: Dict[str, Any], dotted: str) -> Optional[Any]:
    # Follow a dotted path such as "threshold.measures.RR" through the report
    node: Any = report
    for key in dotted.split("."):
        if not isinstance(node, dict) or key not in node:
            return None
        node = node[key]
    return node


# ----------------------------
# Test Execution Logic
# ----------------------------
def evaluate_case(case: Dict[str, Any]) -> Dict[str, Any]:
    print(f"\n--- Running {case['id']} ---")
    print(case.get("description", ""))

    report = build_report(run_analysis(build_state(case)), inputs={"case": case["id"]})
    failures: List[str] = []
    for path, expected in case.get("expect", {}).items():
        got = lookup(report, path)
        if isinstance(expected, list):
            target, tol = expected
            if got is None or abs(got - target) > tol:
                failures.append(f"{path}: got {got}, expected {target} +/- {tol}")
        elif got != expected:
            failures.append(f"{path}: got {got!r}, expected {expected!r}")

    return {"id": case["id"], "passed": not failures, "failures": failures}


# ----------------------------
# Entry Point
# ----------------------------
def main():
    if not TEST_FILE.exists():
        print("test_cases.json not found.")
        return

    with open(TEST_FILE, "r", encoding="utf-8") as f:
        cases = json.load(f)

    results = []
    for case in cases:
        res = evaluate_case(case)
        results.append(res)
        if res["passed"]:
            print("PASS")
        else:
            print("FAIL")
            for fail in res["failures"]:
                print("   -", fail)

    total = len(results)
    passed = sum(r["passed"] for r in results)

    print("\n==============================")
    print(f"FINAL SCORE: {passed}/{total} passed")
    print("==============================")

    # Exit with non-zero status if any case fails (useful for CI)
    if passed != total:
        sys.exit(1)


if __name__ == "__main__":
    main()
