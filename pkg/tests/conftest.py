import pytest

from schemas.tables import Counts2x2, StratifiedTable

COPD = (318, 1631, 4679, 7538)
DIABETES_STROKE = (1823, 647, 110986, 6277)
DRUGS = (114, 978, 3649, 1864)
DRUGS_OVER_35 = (34, 433, 1015, 518)
VACCINE = (1006, 188, 6089, 11102)
VACCINE_BY_AGE = {
    "18-49": (155, 7, 2666, 1523),
    "50-64": (290, 23, 1755, 2447),
    "65+": (561, 158, 1668, 7132),
}


@pytest.fixture
def copd() -> Counts2x2:
    return Counts2x2.of(COPD)


@pytest.fixture
def drugs() -> Counts2x2:
    return Counts2x2.of(DRUGS)


@pytest.fixture
def vaccine() -> Counts2x2:
    return Counts2x2.of(VACCINE)


@pytest.fixture
def vaccine_by_age() -> StratifiedTable:
    return StratifiedTable.of(VACCINE_BY_AGE)
