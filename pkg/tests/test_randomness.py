from fractions import Fraction

import pytest

from schemas.errors import DomainError, InconsistentEvidence, NoTraitPresent
from schemas.evidence import ConcordanceEvidence, ConcordanceInput, ConcordanceKind, TwinCohort
from tools.randomness import (
    cohort_statistics,
    lower_bound_eta,
    pairwise_to_probandwise,
    r_squared_direct,
    r_squared_from_concordance_level,
    r_squared_upper_bound,
)


def evidence(value, prevalence, kind=ConcordanceKind.PROBANDWISE):
    return ConcordanceEvidence(kind=kind, value=value, prevalence=prevalence)


# ----------------------------
# Concordance conversions
# ----------------------------
def test_pairwise_to_probandwise_exact():
    assert pairwise_to_probandwise(Fraction(1, 3)) == Fraction(1, 2)
    assert pairwise_to_probandwise(0.0) == 0.0
    assert pairwise_to_probandwise(1.0) == 1.0


def test_pairwise_to_probandwise_domain():
    with pytest.raises(DomainError):
        pairwise_to_probandwise(1.5)


def test_cohort_statistics_small_cohort():
    stats = cohort_statistics(TwinCohort.of(C=1, D_discordant=2, U=1), exact=True)
    assert stats.BC == Fraction(1, 2)
    assert stats.PC == Fraction(1, 3)
    assert stats.V == Fraction(1, 2)
    assert stats.psi_bar == Fraction(1, 2)


def test_cohort_statistics_identities():
    stats = cohort_statistics(TwinCohort.of(C=17, D_discordant=40, U=143), exact=True)
    assert stats.V == 1 - 2 * stats.psi_bar * (1 - stats.BC)
    assert pairwise_to_probandwise(stats.PC) == stats.BC


def test_cohort_without_trait():
    with pytest.raises(NoTraitPresent):
        cohort_statistics(TwinCohort.of(C=0, D_discordant=0, U=10))


def test_cohort_must_add_up():
    with pytest.raises(DomainError):
        TwinCohort(n=5, C=1, D_discordant=1, U=1)


# ----------------------------
# Upper bounds on R^2
# ----------------------------
def test_r_squared_upper_bound_smoking():
    assert r_squared_upper_bound(evidence(0.67, 0.65)) == pytest.approx(0.057143, abs=1e-6)


def test_pairwise_evidence_matches_probandwise():
    pc = 0.4
    bc = float(pairwise_to_probandwise(pc))
    a = r_squared_upper_bound(evidence(pc, 0.2, ConcordanceKind.PAIRWISE))
    b = r_squared_upper_bound(evidence(bc, 0.2))
    assert a == pytest.approx(b, rel=1e-12)


def test_inconsistent_evidence_rejected():
    # Concordance below the prevalence itself implies a negative variance
    with pytest.raises(InconsistentEvidence):
        evidence(0.2, 0.5)


def test_concordance_at_prevalence_gives_zero():
    assert r_squared_upper_bound(evidence(0.3, 0.3)) == pytest.approx(0.0, abs=1e-12)


# ----------------------------
# Lower bound on eta
# ----------------------------
def test_lower_bound_eta_copd():
    bound = lower_bound_eta(evidence(0.67, 0.65), evidence(0.20, 0.14))
    assert bound.l_eta == pytest.approx(0.93686, abs=1e-4)


def test_lower_bound_eta_drugs():
    bound = lower_bound_eta(evidence(0.50, 0.43), evidence(0.40, 0.17))
    assert bound.l_eta == pytest.approx(0.815526, abs=1e-4)


def test_lower_bound_eta_perfect_concordance():
    bound = lower_bound_eta(evidence(1.0, 0.3), evidence(1.0, 0.6))
    assert bound.l_eta == pytest.approx(0.0, abs=1e-12)


def test_mixed_kinds_factor_per_trait():
    pairwise = evidence(0.5, 0.43, ConcordanceKind.PAIRWISE)
    probandwise = evidence(float(pairwise_to_probandwise(0.5)), 0.43)
    outcome = evidence(0.4, 0.17)
    assert lower_bound_eta(pairwise, outcome).l_eta == pytest.approx(lower_bound_eta(probandwise, outcome).l_eta)


def test_concordance_input_resolves_table_prevalence():
    given = ConcordanceInput(value=0.67)
    assert given.resolve(0.65).prevalence == 0.65
    assert ConcordanceInput(value=0.67, prevalence=0.6).resolve(0.65).prevalence == 0.6


def test_concordance_input_without_any_prevalence():
    with pytest.raises(DomainError):
        ConcordanceInput(value=0.67).resolve(None)


def test_evidence_from_cohort():
    ev = ConcordanceEvidence.from_cohort(TwinCohort.of(C=30, D_discordant=40, U=130), prevalence=0.25)
    assert ev.value == pytest.approx(60 / 100)


# ----------------------------
# Variance identities
# ----------------------------
@pytest.mark.parametrize(
    "psi",
    [
        [Fraction(1, 10), Fraction(9, 10)],
        [Fraction(1, 2), Fraction(1, 2), Fraction(1, 4)],
        [Fraction(k, 97) for k in range(1, 97, 7)],
    ],
)
def test_variance_identity_exact(psi):
    assert r_squared_direct(psi) == r_squared_from_concordance_level(psi)


def test_r_squared_direct_constant_propensity():
    assert r_squared_direct([0.3, 0.3, 0.3]) == pytest.approx(0.0)


def test_r_squared_direct_degenerate_mean():
    with pytest.raises(DomainError):
        r_squared_direct([0.0, 0.0])


@pytest.mark.parametrize("trait", ["exposure", "outcome"])
@pytest.mark.parametrize("other_bc, prevalence", [(0.67, 0.65), (0.20, 0.14), (0.5, 0.43), (0.9, 0.3)])
def test_lower_bound_eta_non_increasing_in_concordance(trait, other_bc, prevalence):
    fixed = evidence(other_bc, prevalence)
    grid = [min(1.0, prevalence + (1.0 - prevalence) * k / 40) for k in range(41)]
    values = []
    for bc in grid:
        varied = evidence(bc, prevalence)
        pair = (varied, fixed) if trait == "exposure" else (fixed, varied)
        values.append(lower_bound_eta(*pair).l_eta)
    assert all(later <= earlier + 1e-12 for earlier, later in zip(values, values[1:]))
    assert values[0] == pytest.approx(1.0)
