from __future__ import annotations

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, model_validator

from schemas.errors import DomainError


class ConcordanceKind(str, Enum):
    PROBANDWISE = "probandwise"
    PAIRWISE = "pairwise"


class ConcordanceEvidence(BaseModel):
    """A monozygotic-twin concordance for one trait, paired with that trait's prevalence.

    `prevalence` is P(e=1) when the trait is the exposure and P(d=1) when it is the outcome.
    """

    model_config = ConfigDict(frozen=True)

    kind: ConcordanceKind = ConcordanceKind.PROBANDWISE
    value: float = Field(..., ge=0.0, le=1.0)
    prevalence: float = Field(..., gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _consistent(self) -> "ConcordanceEvidence":
        from tools.randomness import r_squared_upper_bound

        r_squared_upper_bound(self)
        return self

    @classmethod
    def from_cohort(cls, cohort: "TwinCohort", prevalence: float) -> "ConcordanceEvidence":
        from tools.randomness import cohort_statistics

        stats = cohort_statistics(cohort)
        return cls(kind=ConcordanceKind.PROBANDWISE, value=float(stats.BC), prevalence=prevalence)


class TwinCohort(BaseModel):
    # Twin-pair counts: C concordant-affected, D_discordant discordant, U concordant-unaffected
    model_config = ConfigDict(frozen=True)

    n: NonNegativeInt
    C: NonNegativeInt
    D_discordant: NonNegativeInt
    U: NonNegativeInt

    @model_validator(mode="after")
    def _adds_up(self) -> "TwinCohort":
        if self.C + self.D_discordant + self.U != self.n:
            raise DomainError(
                f"C + D_discordant + U = {self.C + self.D_discordant + self.U} differs from n = {self.n}"
            )
        return self

    @classmethod
    def of(cls, C: int, D_discordant: int, U: int) -> "TwinCohort":
        return cls(n=C + D_discordant + U, C=C, D_discordant=D_discordant, U=U)


class RandomnessBound(BaseModel):
    # l_eta = 1 - sqrt(r2_pi_upper) * sqrt(r2_r_upper)
    model_config = ConfigDict(frozen=True)

    l_eta: float = Field(..., ge=0.0, le=1.0)
    r2_pi_upper: float = Field(..., ge=0.0, le=1.0)
    r2_r_upper: float = Field(..., ge=0.0, le=1.0)
    exposure: ConcordanceEvidence
    outcome: ConcordanceEvidence


class ConcordanceInput(BaseModel):
    """A concordance as supplied by the user, before a prevalence is attached.

    `prevalence` overrides the prevalence taken from the observed table.
    """

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0.0, le=1.0)
    kind: ConcordanceKind = ConcordanceKind.PROBANDWISE
    prevalence: Optional[float] = Field(None, gt=0.0, lt=1.0)

    def resolve(self, table_prevalence: Optional[float]) -> ConcordanceEvidence:
        prevalence = self.prevalence if self.prevalence is not None else table_prevalence
        if prevalence is None:
            raise DomainError("no prevalence given and no table to take it from")
        return ConcordanceEvidence(kind=self.kind, value=self.value, prevalence=prevalence)
