from __future__ import annotations

from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from schemas.tables import AssociationKind


class ThresholdSource(str, Enum):
    FROM_TABLE = "table"
    FROM_MEASURE = "measure"


class ThresholdResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    T: float = Field(..., ge=0.0, le=1.0)
    phi_used: float
    source: ThresholdSource
    measure: Optional[AssociationKind] = None  # set when source is FROM_MEASURE


class ResampleConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    num_samples: PositiveInt = 100_000
    seed: int = Field(..., ge=0, lt=2**64)
    workers: PositiveInt = 1


class CovMatrix4(BaseModel):
    # Multinomial count covariance with its Moore-Penrose pseudo-inverse
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sigma: np.ndarray
    pinv: np.ndarray
    rank: int


class FpcResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    T_n: float
    T_point: float
    quantile_alt: float
    se_alt: float
    accepted_count: int
    degenerate_count: int
    chi2_cutoff: float
    config: ResampleConfig

    @model_validator(mode="after")
    def _relaxation_never_shrinks(self) -> "FpcResult":
        if self.T_n < self.T_point:
            raise ValueError(f"T_n={self.T_n} fell below T_point={self.T_point}")
        return self


class StratumBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    weight: float
    phi2_c: float
    var_e_c: float
    var_d_c: float
    l2_pi: float
    u2_pi: float
    l2_r: float
    u2_r: float

    @property
    def k(self) -> float:
        # Right-hand side of the hyperbola constraint x * y = k
        return self.phi2_c * self.var_e_c * self.var_d_c


class TauProblem(BaseModel):
    model_config = ConfigDict(frozen=True)

    strata: List[StratumBounds]
    A: float = Field(..., ge=0.0)
    B: float = Field(..., ge=0.0)
    var_e: float = Field(..., gt=0.0)
    var_d: float = Field(..., gt=0.0)


class TauSolution(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau: float = Field(..., ge=0.0)
    variances: List[Tuple[float, float]]  # per stratum (sigma2_pi|c, sigma2_r|c)
    T_c: float
    solver_gap: float = Field(..., ge=0.0)
    method: str
    problem: TauProblem


class CheckResult(BaseModel):
    # One property of the verification suite, aggregated over its generated cases
    model_config = ConfigDict(frozen=True)

    name: str
    cases: int
    failures: int
    diagnostics: Dict[str, float] = Field(default_factory=dict)
    first_failure: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failures == 0


class SuiteReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    intensity: str
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failed_checks(self) -> List[str]:
        return [c.name for c in self.checks if not c.ok]
