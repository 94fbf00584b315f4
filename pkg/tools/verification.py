"""Property suite behind `verify`.

Each check draws its own cases from a Philox stream spawned off the suite seed, so a check's
outcome does not depend on which other checks ran or in what order.
"""

from __future__ import annotations

import logging
import time
from fractions import Fraction
from typing import Callable, Dict, List, Literal, Optional, Tuple

import numpy as np

from schemas.errors import DomainError
from schemas.evidence import ConcordanceEvidence, TwinCohort
from schemas.population import LatentPopulation
from schemas.results import CheckResult, ResampleConfig, SuiteReport
from schemas.tables import AssociationKind, Counts2x2, MarginalSummary, StratifiedTable
from tools.covariate import DEFAULT_TAU_TOL, build_problem, feasible_interval, solve_tau, threshold_Tc
from tools.finitepop import fpc_threshold
from tools.ingest import ipw_hospitalized_adjust
from tools.linalg import chi2_quantile_df3
from tools.oracle import (
    coverage_rate,
    covariance_pair,
    diagonal_population,
    is_diagonally_dominant,
    loewner_gap,
    multinomial_coverage_rate,
    random_null_population,
    simulate_twin_cohort,
    verify_threshold_bound,
)
from tools.randomness import (
    cohort_statistics,
    r_squared_direct,
    r_squared_from_concordance_level,
    r_squared_upper_bound,
)
from tools.tables import from_counts, measures
from tools.threshold import threshold_T, threshold_from_measure

logger = logging.getLogger(__name__)

Intensity = Literal["quick", "full"]

# Case counts per intensity
BUDGET: Dict[str, Dict[str, int]] = {
    "quick": {
        "tables": 200,
        "populations": 100,
        "max_population": 1000,
        "cohorts": 200,
        "twin_simulations": 10,
        "dominance": 50,
        "stratified": 30,
        "fpc_samples": 5000,
        "coverage_reps": 2000,
        "solver_problems": 3,
        "solver_grid": 300,
    },
    "full": {
        "tables": 1000,
        "populations": 500,
        "max_population": 10_000,
        "cohorts": 1000,
        "twin_simulations": 100,
        "dominance": 200,
        "stratified": 200,
        "fpc_samples": 20_000,
        "coverage_reps": 4000,
        "solver_problems": 20,
        "solver_grid": 1000,
    },
}

BRANCH_TOL = 1e-9
NEAR_TIGHT_GAP = 0.05
PSD_SLACK = 1e-9
TWIN_SLACK = 0.01
TWIN_VIOLATION_RATE = 0.01
COVERAGE_BAND = (0.93, 0.97)
POPULATION_COVERAGE_FLOOR = 0.93


class _Tally:
    def __init__(self, name: str) -> None:
        self.name = name
        self.cases = 0
        self.failures = 0
        self.first_failure: Optional[str] = None
        self.diagnostics: Dict[str, float] = {}

    def record(self, ok: bool, detail: str = "") -> None:
        self.cases += 1
        if not ok:
            self.failures += 1
            if self.first_failure is None:
                self.first_failure = detail

    def result(self) -> CheckResult:
        return CheckResult(
            name=self.name,
            cases=self.cases,
            failures=self.failures,
            diagnostics=self.diagnostics,
            first_failure=self.first_failure,
        )


def _interior_counts(rng: np.random.Generator, high: int = 500) -> Counts2x2:
    return Counts2x2.of(rng.integers(1, high, size=4))


def check_measure_branches(rng: np.random.Generator, budget: Dict[str, int], fault: bool) -> CheckResult:
    tally = _Tally("measure_branches")
    worst = 0.0
    for _ in range(budget["tables"]):
        p = from_counts(_interior_counts(rng))
        T = threshold_T(p).T
        m = measures(p)
        for kind, value in ((AssociationKind.RD, m.RD), (AssociationKind.RR, m.RR), (AssociationKind.OR, m.OR)):
            summary = MarginalSummary(p_e=p.p_e, p_d=p.p_d, kind=kind, value=value)
            gap = abs(threshold_from_measure(summary).T - T)
            worst = max(worst, gap)
            tally.record(gap <= BRANCH_TOL, f"{kind.value} branch off by {gap:.3g} at {p.cells()}")
    tally.diagnostics["max_abs_gap"] = worst
    return tally.result()


def _eta_minus_T(pop: LatentPopulation) -> float:
    check = verify_threshold_bound(pop)
    return check.eta - check.T


def check_threshold_soundness(rng: np.random.Generator, budget: Dict[str, int], fault: bool) -> CheckResult:
    tally = _Tally("threshold_soundness")
    worst = -1.0
    for _ in range(budget["populations"]):
        size = int(rng.integers(2, budget["max_population"] + 1))
        check = verify_threshold_bound(random_null_population(rng, size))
        T = check.T * 0.5 if fault else check.T
        worst = max(worst, check.eta - T)
        tally.record(check.eta <= T + 1e-9, f"eta={check.eta:.9f} > T={T:.9f} (size {size})")

    # Two-point diagonal populations should come close to the bound
    tight = max(_eta_minus_T(diagonal_population(eps)) for eps in np.linspace(0.02, 0.48, 24))
    tally.record(tight >= -NEAR_TIGHT_GAP, f"best two-point eta - T = {tight:.4f}")
    tally.diagnostics["max_eta_minus_T"] = worst
    tally.diagnostics["near_tightness_gap"] = tight
    return tally.result()


def check_concordance_lemmas(rng: np.random.Generator, budget: Dict[str, int], fault: bool) -> CheckResult:
    tally = _Tally("concordance_lemmas")
    for _ in range(budget["cohorts"]):
        C, D, U = (int(v) for v in rng.integers(0, 200, size=3))
        if C + D == 0:
            D = 1
        stats = cohort_statistics(TwinCohort.of(C=C, D_discordant=D, U=U), exact=True)
        ok = stats.V == 1 - 2 * stats.psi_bar * (1 - stats.BC)
        ok = ok and (1 - stats.PC) / (1 + stats.PC) == 1 - stats.BC
        tally.record(ok, f"cohort identity fails at C={C}, D={D}, U={U}")

        size = int(rng.integers(1, 20))
        psi = [Fraction(int(k), 1000) for k in rng.integers(1, 1000, size=size)]
        same = r_squared_direct(psi) == r_squared_from_concordance_level(psi)
        tally.record(same, f"variance identity fails for {psi}")
    return tally.result()


def check_twin_bound(rng: np.random.Generator, budget: Dict[str, int], fault: bool) -> CheckResult:
    """Reared-apart cohorts: the concordance bound should not undershoot the true R^2."""
    tally = _Tally("twin_bound")
    violations = 0
    sims = budget["twin_simulations"]
    for _ in range(sims):
        psi = rng.uniform(0.2, 0.8, size=1000)
        cohort = simulate_twin_cohort(psi.tolist(), pairs_per_psi=100, seed=int(rng.integers(2**63)))
        stats = cohort_statistics(cohort)
        evidence = ConcordanceEvidence(value=float(stats.BC), prevalence=float(stats.psi_bar))
        bound = r_squared_upper_bound(evidence)
        truth = float(r_squared_direct(psi.tolist()))
        if bound < truth - TWIN_SLACK:
            violations += 1
    rate = violations / sims
    tally.record(rate <= TWIN_VIOLATION_RATE, f"{violations} of {sims} simulations undershoot")
    tally.diagnostics["violation_rate"] = rate
    return tally.result()


def check_covariance_dominance(rng: np.random.Generator, budget: Dict[str, int], fault: bool) -> CheckResult:
    tally = _Tally("covariance_dominance")
    smallest = np.inf
    dominant = 0
    for _ in range(budget["dominance"]):
        pop = random_null_population(rng, int(rng.integers(2, 500)))
        gap = loewner_gap(pop)
        smallest = min(smallest, gap)
        sigma_gpb, sigma_mult = covariance_pair(pop)
        dominant += is_diagonally_dominant(sigma_mult - sigma_gpb)
        tally.record(gap >= -PSD_SLACK, f"min eigenvalue {gap:.3g} for a {pop.size}-point population")
    # Diagonal dominance of the difference is not guaranteed; reported only
    tally.diagnostics["min_eigenvalue"] = float(smallest)
    tally.diagnostics["diagonally_dominant_share"] = dominant / max(1, budget["dominance"])
    return tally.result()


def _random_stratified(rng: np.random.Generator, strata: int) -> StratifiedTable:
    return StratifiedTable.of({f"s{i}": rng.integers(1, 300, size=4).tolist() for i in range(strata)})


def check_covariate_monotonicity(rng: np.random.Generator, budget: Dict[str, int], fault: bool) -> CheckResult:
    tally = _Tally("covariate_monotonicity")
    worst = -1.0
    for _ in range(budget["stratified"]):
        table = _random_stratified(rng, int(rng.integers(2, 4)))
        T = threshold_T(from_counts(table.marginal())).T
        T_c = threshold_Tc(table, DEFAULT_TAU_TOL).T_c
        worst = max(worst, T_c - T)
        tally.record(T_c <= T + DEFAULT_TAU_TOL, f"T_c={T_c:.6f} > T={T:.6f} for {table.labels}")
    tally.diagnostics["max_Tc_minus_T"] = worst
    return tally.result()


def check_solver_soundness(rng: np.random.Generator, budget: Dict[str, int], fault: bool) -> CheckResult:
    """Two-stratum problems against a dense grid over both feasible intervals."""
    tally = _Tally("solver_soundness")
    points = budget["solver_grid"]
    worst = 0.0
    for _ in range(budget["solver_problems"]):
        problem = build_problem(_random_stratified(rng, 2))
        solution = solve_tau(problem, DEFAULT_TAU_TOL)
        (b1, b2) = problem.strata
        x1 = np.linspace(*feasible_interval(b1), points)
        x2 = np.linspace(*feasible_interval(b2), points)
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        F = problem.A + b1.weight * X1 + b2.weight * X2
        G = problem.B + b1.weight * b1.k / X1 + b2.weight * b2.k / X2
        dense = float((F * G).min())
        gap = abs(solution.tau - dense)
        worst = max(worst, gap)
        tally.record(gap <= 2 * DEFAULT_TAU_TOL, f"tau={solution.tau:.6g} vs grid {dense:.6g}")
    tally.diagnostics["max_abs_gap"] = worst
    return tally.result()


def check_fpc_monotonicity(rng: np.random.Generator, budget: Dict[str, int], fault: bool) -> CheckResult:
    tally = _Tally("fpc_monotonicity")
    x0 = _interior_counts(rng, high=400)
    seed = int(rng.integers(2**63))
    previous = np.inf
    for alpha in (0.01, 0.05, 0.2, 0.5):
        result = fpc_threshold(x0, ResampleConfig(alpha=alpha, num_samples=budget["fpc_samples"], seed=seed))
        tally.record(result.T_n >= result.T_point, f"T_n below T at alpha={alpha}")
        tally.record(result.T_n <= previous + 1e-12, f"T_n grew at alpha={alpha}")
        previous = result.T_n
    return tally.result()


def check_coverage(rng: np.random.Generator, budget: Dict[str, int], fault: bool) -> CheckResult:
    tally = _Tally("coverage")
    cutoff = chi2_quantile_df3(0.95)
    p = from_counts(Counts2x2.of((200, 300, 350, 150)))
    rate = multinomial_coverage_rate(p, 1000, budget["coverage_reps"], cutoff, rng)
    lo, hi = COVERAGE_BAND
    tally.record(lo <= rate <= hi, f"multinomial acceptance {rate:.4f} outside [{lo}, {hi}]")

    # Heterogeneous but well inside the square, so every expected cell holds dozens of counts
    pi = rng.uniform(0.2, 0.8, size=1000)
    pop = LatentPopulation.null(pi, 0.5 * rng.uniform(0.2, 0.8, size=1000) + 0.5 * pi)
    pop_rate = coverage_rate(pop, budget["coverage_reps"], cutoff, rng)
    tally.record(pop_rate >= POPULATION_COVERAGE_FLOOR, f"population acceptance {pop_rate:.4f}")
    tally.diagnostics["multinomial_rate"] = rate
    tally.diagnostics["population_rate"] = pop_rate
    return tally.result()


def check_ipw_formula(rng: np.random.Generator, budget: Dict[str, int], fault: bool) -> CheckResult:
    tally = _Tally("ipw_formula")
    for a in range(0, 60):
        for b in range(0, 60, 3):
            got = ipw_hospitalized_adjust(a, b, 0.9)
            tally.record(got == (a + b) * 10 - a, f"({a}, {b}) -> {got}")
    return tally.result()


CHECKS: List[Tuple[str, Callable[[np.random.Generator, Dict[str, int], bool], CheckResult]]] = [
    ("measure_branches", check_measure_branches),
    ("threshold_soundness", check_threshold_soundness),
    ("concordance_lemmas", check_concordance_lemmas),
    ("twin_bound", check_twin_bound),
    ("covariance_dominance", check_covariance_dominance),
    ("covariate_monotonicity", check_covariate_monotonicity),
    ("solver_soundness", check_solver_soundness),
    ("fpc_monotonicity", check_fpc_monotonicity),
    ("coverage", check_coverage),
    ("ipw_formula", check_ipw_formula),
]


def run_suite(seed: int, intensity: Intensity = "full", inject_fault: bool = False) -> SuiteReport:
    """Run every property check; `inject_fault` corrupts the threshold to exercise the failure path."""
    if intensity not in BUDGET:
        raise DomainError(f"unknown intensity {intensity!r}")
    budget = BUDGET[intensity]
    streams = np.random.SeedSequence(seed).spawn(len(CHECKS))
    results: List[CheckResult] = []
    for (name, check), stream in zip(CHECKS, streams):
        t0 = time.perf_counter()
        result = check(np.random.Generator(np.random.Philox(stream)), budget, inject_fault)
        logger.info(
            "%s: %d cases, %d failures (%.2fs)",
            name, result.cases, result.failures, time.perf_counter() - t0,
        )
        results.append(result)
    return SuiteReport(seed=seed, intensity=intensity, checks=results)
