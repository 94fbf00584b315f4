from __future__ import annotations

from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from schemas.errors import DomainError


class LatentPopulation(BaseModel):
    """Finite equal-weight population of (pi, r0, r1) point masses.

    pi is the propensity of exposure; r0 and r1 are the prognoses without and with it.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pi: np.ndarray
    r0: np.ndarray
    r1: np.ndarray

    @model_validator(mode="after")
    def _interior(self) -> "LatentPopulation":
        if self.pi.ndim != 1 or self.pi.size == 0:
            raise DomainError("population must be a nonempty 1-d collection")
        if self.r0.shape != self.pi.shape or self.r1.shape != self.pi.shape:
            raise DomainError("pi, r0 and r1 must have the same length")
        for name, arr in (("pi", self.pi), ("r0", self.r0), ("r1", self.r1)):
            if not np.all((arr > 0.0) & (arr < 1.0)):
                raise DomainError(f"{name} values must lie strictly inside (0, 1)")
        return self

    @classmethod
    def from_points(cls, points: Iterable[Tuple[float, float, float]]) -> "LatentPopulation":
        arr = np.asarray(list(points), dtype=float).reshape(-1, 3)
        return cls(pi=arr[:, 0].copy(), r0=arr[:, 1].copy(), r1=arr[:, 2].copy())

    @classmethod
    def null(cls, pi: Sequence[float], r: Sequence[float]) -> "LatentPopulation":
        # Population under H0: r0 = r1 = r for everyone
        r_arr = np.asarray(r, dtype=float)
        return cls(pi=np.asarray(pi, dtype=float), r0=r_arr, r1=r_arr.copy())

    @property
    def size(self) -> int:
        return int(self.pi.size)

    @property
    def is_null(self) -> bool:
        return bool(np.array_equal(self.r0, self.r1))

    @property
    def r(self) -> np.ndarray:
        return self.pi * self.r1 + (1.0 - self.pi) * self.r0


class EtaValue(BaseModel):
    # eta = 1 - R_pi * R_r
    model_config = ConfigDict(frozen=True)

    eta: float
    R_pi: float = Field(..., ge=0.0, le=1.0)
    R_r: float = Field(..., ge=0.0, le=1.0)


class ThresholdCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    eta: float
    T: float
    ok: bool
    note: Optional[str] = None
