import numpy as np
import pytest

from schemas.errors import DomainError, Infeasible, ZeroThreshold
from schemas.results import ThresholdSource
from schemas.tables import AssociationKind, Counts2x2, MarginalSummary
from tests.conftest import COPD, DRUGS, DRUGS_OVER_35
from tools.tables import from_counts, measures
from tools.threshold import (
    ample_randomness_ratio,
    cells_from_measure,
    lambda_ratio,
    rr_from_or,
    threshold_from_measure,
    threshold_T,
)


def test_threshold_copd(copd):
    result = threshold_T(from_counts(copd))
    assert result.T == pytest.approx(0.8415, abs=5e-4)
    assert result.source is ThresholdSource.FROM_TABLE
    assert result.measure is None


@pytest.mark.parametrize(
    "cells, expected",
    [
        (DRUGS, 0.58),
        (DRUGS_OVER_35, 0.50),
    ],
)
def test_threshold_published_tables(cells, expected):
    assert threshold_T(from_counts(Counts2x2.of(cells))).T == pytest.approx(expected, abs=5e-3)


def test_threshold_independent_table_is_one():
    assert threshold_T(from_counts(Counts2x2.of((1, 1, 1, 1)))).T == 1.0


def test_lambda_ratio():
    assert lambda_ratio(0.65, 0.14) == pytest.approx(1.3746, abs=1e-4)
    assert lambda_ratio(0.3, 0.3) == pytest.approx(1.0)


@pytest.mark.parametrize("p_e, p_d", [(0.0, 0.5), (0.5, 1.0), (-0.1, 0.2)])
def test_lambda_ratio_domain(p_e, p_d):
    with pytest.raises(DomainError):
        lambda_ratio(p_e, p_d)


def test_rr_from_or_identity_at_one():
    assert rr_from_or(0.3, 0.2, 1.0) == pytest.approx(1.0)


def test_rr_from_or_recovers_table_rr(copd):
    p = from_counts(copd)
    m = measures(p)
    assert rr_from_or(p.p_e, p.p_d, m.OR) == pytest.approx(m.RR, rel=1e-10)


def test_rr_from_or_rejects_nonpositive():
    with pytest.raises(Infeasible):
        rr_from_or(0.3, 0.2, 0.0)


@pytest.mark.parametrize("cells", [COPD, DRUGS, (1006, 188, 6089, 11102), (5, 40, 30, 2)])
def test_every_measure_branch_gives_the_table_threshold(cells):
    p = from_counts(Counts2x2.of(cells))
    T = threshold_T(p).T
    m = measures(p)
    for kind, value in (
        (AssociationKind.PHI, threshold_T(p).phi_used),
        (AssociationKind.RD, m.RD),
        (AssociationKind.RR, m.RR),
        (AssociationKind.OR, m.OR),
    ):
        summary = MarginalSummary(p_e=p.p_e, p_d=p.p_d, kind=kind, value=value)
        result = threshold_from_measure(summary)
        assert result.T == pytest.approx(T, abs=1e-9), kind
        assert result.measure is kind
        assert result.source is ThresholdSource.FROM_MEASURE


def test_diabetes_stroke_from_relative_risk():
    summary = MarginalSummary(p_e=0.0578, p_d=0.0206, kind=AssociationKind.RR, value=5.8)
    result = threshold_from_measure(summary)
    assert result.phi_used == pytest.approx(0.12717, abs=5e-4)
    assert result.T == pytest.approx(0.87, abs=0.01)


def test_phi_summary_maps_directly():
    summary = MarginalSummary(p_e=0.5, p_d=0.5, kind=AssociationKind.PHI, value=0.3)
    assert threshold_from_measure(summary).T == pytest.approx(0.7)


def test_cells_from_measure_reconstructs_table(copd):
    p = from_counts(copd)
    summary = MarginalSummary(p_e=p.p_e, p_d=p.p_d, kind=AssociationKind.RR, value=measures(p).RR)
    q = cells_from_measure(summary)
    assert q.cells() == pytest.approx(p.cells(), abs=1e-12)


def test_infeasible_summary_is_rejected():
    with pytest.raises(Infeasible):
        MarginalSummary(p_e=0.1, p_d=0.5, kind=AssociationKind.RR, value=20.0)


def test_negative_relative_risk_is_rejected():
    with pytest.raises(Infeasible):
        MarginalSummary(p_e=0.3, p_d=0.3, kind=AssociationKind.RR, value=-1.0)


def test_ample_randomness_ratio():
    assert ample_randomness_ratio(0.9, 0.6) == pytest.approx(1.5)
    assert ample_randomness_ratio(0.42, threshold_T(from_counts(Counts2x2.of((1, 1, 1, 1))))) == pytest.approx(0.42)


def test_ample_randomness_ratio_zero_threshold():
    with pytest.raises(ZeroThreshold):
        ample_randomness_ratio(0.9, 0.0)


@pytest.mark.parametrize("p_e, rr", [(0.3, 1.5), (0.3, 2.0), (0.65, 2.8), (0.43, 11.4), (0.1, 40.0)])
def test_rr_branch_non_increasing_in_outcome_prevalence(p_e, rr):
    # Exposed risk rr * p_d / (1 + p_e (rr - 1)) must stay below 1
    limit = min(0.99, (1.0 + p_e * (rr - 1.0)) / rr)
    grid = np.linspace(0.01, 0.95 * limit, 60)
    values = [threshold_from_measure(MarginalSummary(p_e=p_e, p_d=float(p_d), kind=AssociationKind.RR, value=rr)).T for p_d in grid]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(values, values[1:]))
    assert values[-1] < values[0]
