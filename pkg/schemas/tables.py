from __future__ import annotations

from enum import Enum
from typing import Dict, List, Mapping, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, model_validator

from schemas.errors import DomainError, EmptyTable, ZeroCell

SIMPLEX_TOL = 1e-12


class Counts2x2(BaseModel):
    """Observed (e, d) cell counts.

    Cells are always given in the order (x01, x11, x00, x10): the first digit is the
    exposure e, the second the outcome d. Published tables usually print outcome rows
    against exposure columns, which reads in the same order row by row.
    """

    model_config = ConfigDict(frozen=True)

    x01: NonNegativeInt
    x11: NonNegativeInt
    x00: NonNegativeInt
    x10: NonNegativeInt

    @model_validator(mode="after")
    def _nonempty(self) -> "Counts2x2":
        if self.n == 0:
            raise EmptyTable("table has no observations")
        return self

    @classmethod
    def of(cls, cells: Sequence[int]) -> "Counts2x2":
        if len(cells) != 4:
            raise DomainError(f"expected 4 counts (x01, x11, x00, x10), got {len(cells)}")
        x01, x11, x00, x10 = (int(c) for c in cells)
        return cls(x01=x01, x11=x11, x00=x00, x10=x10)

    @property
    def n(self) -> int:
        return self.x01 + self.x11 + self.x00 + self.x10

    def cells(self) -> Tuple[int, int, int, int]:
        return (self.x01, self.x11, self.x00, self.x10)

    @property
    def exposed(self) -> int:
        return self.x11 + self.x10

    @property
    def unexposed(self) -> int:
        return self.x01 + self.x00

    def has_zero_cell(self) -> bool:
        return min(self.cells()) == 0

    def swap_exposure(self) -> "Counts2x2":
        # Relabel e=0 <-> e=1
        return Counts2x2(x01=self.x11, x11=self.x01, x00=self.x10, x10=self.x00)

    def __add__(self, other: "Counts2x2") -> "Counts2x2":
        return Counts2x2(
            x01=self.x01 + other.x01,
            x11=self.x11 + other.x11,
            x00=self.x00 + other.x00,
            x10=self.x10 + other.x10,
        )


class Probs2x2(BaseModel):
    # A point of the open 3-simplex, same cell order as Counts2x2
    model_config = ConfigDict(frozen=True)

    p01: float
    p11: float
    p00: float
    p10: float

    @model_validator(mode="after")
    def _in_simplex(self) -> "Probs2x2":
        cells = self.cells()
        if min(cells) <= 0.0:
            raise ZeroCell(f"every cell must be positive, got {cells}")
        if abs(sum(cells) - 1.0) > SIMPLEX_TOL:
            raise DomainError(f"cell probabilities sum to {sum(cells)!r}, not 1")
        return self

    def cells(self) -> Tuple[float, float, float, float]:
        return (self.p01, self.p11, self.p00, self.p10)

    @property
    def p_e(self) -> float:
        return self.p11 + self.p10

    @property
    def p_d(self) -> float:
        return self.p01 + self.p11


class AssociationKind(str, Enum):
    PHI = "phi"
    RD = "rd"
    RR = "rr"
    OR = "or"


class MarginalSummary(BaseModel):
    """Exposure and outcome prevalences with one measure of association.

    Construction checks that the triple is the reparametrisation of an interior table.
    """

    model_config = ConfigDict(frozen=True)

    p_e: float = Field(..., gt=0.0, lt=1.0)
    p_d: float = Field(..., gt=0.0, lt=1.0)
    kind: AssociationKind
    value: float

    @model_validator(mode="after")
    def _feasible(self) -> "MarginalSummary":
        # Imported here: tools.threshold depends on this module
        from tools.threshold import cells_from_measure

        cells_from_measure(self)
        return self


class Stratum(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    counts: Counts2x2


class StratifiedTable(BaseModel):
    # Covariate-level tables; weights are the stratum shares of the total count
    model_config = ConfigDict(frozen=True)

    strata: List[Stratum] = Field(..., min_length=1)

    @classmethod
    def of(cls, tables: Mapping[str, Sequence[int]]) -> "StratifiedTable":
        return cls(strata=[Stratum(label=str(k), counts=Counts2x2.of(v)) for k, v in tables.items()])

    @property
    def labels(self) -> List[str]:
        return [s.label for s in self.strata]

    @property
    def n(self) -> int:
        return sum(s.counts.n for s in self.strata)

    @property
    def weights(self) -> List[float]:
        total = self.n
        return [s.counts.n / total for s in self.strata]

    def marginal(self) -> Counts2x2:
        out = self.strata[0].counts
        for s in self.strata[1:]:
            out = out + s.counts
        return out

    def merged(self, mapping: Mapping[str, str]) -> "StratifiedTable":
        """Relabel strata through `mapping` and pool those that end up sharing a label.

        First-appearance order of the resulting labels is kept.
        """
        pooled: Dict[str, Counts2x2] = {}
        for s in self.strata:
            target = mapping.get(s.label, s.label)
            pooled[target] = pooled[target] + s.counts if target in pooled else s.counts
        return StratifiedTable(strata=[Stratum(label=k, counts=v) for k, v in pooled.items()])

    def replicated(self, k: int) -> "StratifiedTable":
        # k identical copies of every stratum, labelled "<label>#<i>"
        return StratifiedTable(
            strata=[Stratum(label=f"{s.label}#{i}", counts=s.counts) for s in self.strata for i in range(k)]
        )
