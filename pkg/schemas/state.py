from __future__ import annotations

from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from schemas.evidence import ConcordanceInput, RandomnessBound
from schemas.results import FpcResult, ResampleConfig, TauSolution, ThresholdResult
from schemas.tables import Counts2x2, MarginalSummary, StratifiedTable


class Verdict(str, Enum):
    WARRANTED = "Warranted"
    NOT_WARRANTED = "NotWarranted"
    INDETERMINATE = "Indeterminate"


class TraceEntry(BaseModel):
    # Single trace entry for stage actions (which stage did what, with what outcome)
    stage: str
    action: str
    outcome: str


class CausalityState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    # Inputs: exactly one of counts / summary / stratified drives the threshold stage
    command: str = "test"
    counts: Optional[Counts2x2] = None
    summary: Optional[MarginalSummary] = None
    stratified: Optional[StratifiedTable] = None
    haldane: bool = False
    resample: Optional[ResampleConfig] = None
    tau_tol: float = 1e-4
    exposure: Optional[ConcordanceInput] = None
    outcome: Optional[ConcordanceInput] = None
    prevalence_tolerance: float = 0.05

    # Threshold stage
    threshold: Optional[ThresholdResult] = None
    p_e: Optional[float] = None
    p_d: Optional[float] = None
    measures: Dict[str, float] = Field(default_factory=dict)

    # Finite-population and covariate stages
    fpc: Optional[FpcResult] = None
    tau: Optional[TauSolution] = None
    adjusted_rr: Optional[float] = None

    # Randomness and verdict stages
    randomness: Optional[RandomnessBound] = None
    applicable: Optional[str] = None  # "T", "T_n" or "T_c"
    applicable_threshold: Optional[float] = None
    verdict: Optional[Verdict] = None
    ample_ratio: Optional[float] = None
    ample_ratio_marginal: Optional[float] = None
    notes: List[str] = Field(default_factory=list)

    # Traceability: chronological stage logs
    trace: List[TraceEntry] = Field(default_factory=list)

    # Extra metadata (observability, seed provenance)
    meta: Dict[str, Any] = Field(default_factory=dict)

    def log(self, stage: str, action: str, outcome: str) -> None:
        self.trace.append(TraceEntry(stage=stage, action=action, outcome=outcome))
