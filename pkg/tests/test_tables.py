import math

import numpy as np
import pytest

from schemas.errors import DegenerateStratum, DomainError, EmptyTable, ZeroCell
from schemas.tables import Counts2x2, Probs2x2, StratifiedTable
from tests.conftest import DIABETES_STROKE, VACCINE
from tools.tables import adjusted_rr, from_counts, haldane, measures, phi, phi_cells


# ----------------------------
# Counts and probabilities
# ----------------------------
def test_counts_roundtrip_cell_order():
    c = Counts2x2.of((1, 2, 3, 4))
    assert c.cells() == (1, 2, 3, 4)
    assert c.n == 10
    assert c.exposed == 6  # x11 + x10
    assert c.unexposed == 4


def test_empty_table_rejected():
    with pytest.raises(EmptyTable):
        Counts2x2.of((0, 0, 0, 0))


def test_wrong_arity_rejected():
    with pytest.raises(DomainError):
        Counts2x2.of((1, 2, 3))


def test_from_counts_needs_every_cell():
    with pytest.raises(ZeroCell):
        from_counts(Counts2x2.of((0, 5, 5, 5)))


def test_haldane_fills_empty_cells():
    p = haldane(Counts2x2.of((0, 5, 5, 0)))
    assert min(p.cells()) > 0.0
    assert sum(p.cells()) == pytest.approx(1.0)
    assert p.p01 == pytest.approx(0.5 / 12.0)


def test_probs_reject_boundary():
    with pytest.raises(ZeroCell):
        Probs2x2(p01=0.0, p11=0.5, p00=0.25, p10=0.25)
    with pytest.raises(DomainError):
        Probs2x2(p01=0.3, p11=0.3, p00=0.3, p10=0.3)


# ----------------------------
# phi and measures
# ----------------------------
def test_phi_copd(copd):
    assert phi(from_counts(copd)) == pytest.approx(0.1585, abs=5e-4)


def test_phi_vaccine_is_negative(vaccine):
    assert phi(from_counts(vaccine)) == pytest.approx(-0.2472, abs=5e-4)


def test_phi_relabel_antisymmetry(copd):
    p = from_counts(copd)
    q = from_counts(copd.swap_exposure())
    assert phi(q) == -phi(p)


def test_phi_independent_table_is_zero():
    assert phi(from_counts(Counts2x2.of((10, 10, 10, 10)))) == 0.0


def test_phi_cells_matches_scalar(copd):
    assert float(phi_cells(*copd.cells())) == pytest.approx(phi(from_counts(copd)), rel=1e-12)


def test_phi_cells_nan_for_degenerate():
    assert math.isnan(float(phi_cells(0, 0, 5, 5)))


def test_measures_copd(copd):
    m = measures(from_counts(copd))
    assert m.RR == pytest.approx(2.795, abs=5e-3)
    assert m.RD > 0.0
    assert m.OR > m.RR > 1.0


def test_measures_diabetes_stroke():
    m = measures(from_counts(Counts2x2.of(DIABETES_STROKE)))
    assert m.RR == pytest.approx(5.8, abs=0.1)


def test_measures_vaccine_protective():
    m = measures(from_counts(Counts2x2.of(VACCINE)))
    assert m.RR == pytest.approx(0.12, abs=0.01)
    assert m.RD < 0.0


# ----------------------------
# Stratified tables
# ----------------------------
def test_marginal_sums_strata(vaccine_by_age):
    assert vaccine_by_age.marginal().cells() == VACCINE
    assert vaccine_by_age.labels == ["18-49", "50-64", "65+"]
    assert sum(vaccine_by_age.weights) == pytest.approx(1.0)


def test_merged_pools_and_keeps_order(vaccine_by_age):
    merged = vaccine_by_age.merged({"18-49": "under-65", "50-64": "under-65"})
    assert merged.labels == ["under-65", "65+"]
    assert merged.strata[0].counts.cells() == (445, 30, 4421, 3970)
    assert merged.marginal() == vaccine_by_age.marginal()


def test_replicated_keeps_weights_proportional(vaccine_by_age):
    doubled = vaccine_by_age.replicated(2)
    assert len(doubled.strata) == 6
    assert doubled.weights[0] == pytest.approx(vaccine_by_age.weights[0] / 2)


def test_adjusted_rr_vaccine(vaccine_by_age):
    assert adjusted_rr(vaccine_by_age) == pytest.approx(0.0808, abs=1e-3)


def test_adjusted_rr_single_stratum_is_crude(copd):
    table = StratifiedTable.of({"all": copd.cells()})
    assert adjusted_rr(table) == pytest.approx(measures(from_counts(copd)).RR, rel=1e-9)


def test_adjusted_rr_needs_both_exposure_levels():
    table = StratifiedTable.of({"a": (5, 0, 5, 0), "b": (5, 5, 5, 5)})
    with pytest.raises(DegenerateStratum):
        adjusted_rr(table)


@pytest.mark.parametrize("k", [2, 3, 7])
@pytest.mark.parametrize("cells", [DIABETES_STROKE, VACCINE, (318, 1631, 4679, 7538), (3, 9, 40, 2)])
def test_adjusted_rr_of_replicated_stratum_is_crude(cells, k):
    table = StratifiedTable.of({"all": cells}).replicated(k)
    assert len(table.strata) == k
    crude = measures(from_counts(Counts2x2.of(cells))).RR
    assert adjusted_rr(table) == pytest.approx(crude, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_adjusted_rr_of_random_replicated_tables(seed):
    rng = np.random.default_rng(seed)
    for _ in range(20):
        cells = rng.integers(1, 1000, size=4).tolist()
        table = StratifiedTable.of({"s": cells}).replicated(int(rng.integers(2, 10)))
        crude = measures(from_counts(Counts2x2.of(cells))).RR
        assert adjusted_rr(table) == pytest.approx(crude, rel=1e-12)
