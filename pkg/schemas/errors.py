from __future__ import annotations

from typing import Optional


class ObsCausalError(Exception):
    # Base for every data or computation error. Not a ValueError, so pydantic validators
    # let it propagate unchanged instead of wrapping it in a ValidationError.
    pass


class EmptyTable(ObsCausalError):
    pass


class ZeroCell(ObsCausalError):
    pass


class DegenerateMarginal(ObsCausalError):
    pass


class DegenerateStratum(ObsCausalError):
    def __init__(self, label: str, reason: str = "conditional marginal is 0 or 1") -> None:
        super().__init__(f"stratum {label!r}: {reason}")
        self.label = label


class DomainError(ObsCausalError):
    pass


class Infeasible(ObsCausalError):
    pass


class ZeroThreshold(ObsCausalError):
    pass


class InconsistentEvidence(ObsCausalError):
    pass


class NoTraitPresent(ObsCausalError):
    pass


class NotSymmetric(ObsCausalError):
    pass


class NoAcceptedSamples(ObsCausalError):
    pass


class DegenerateMean(ObsCausalError):
    pass


class MissingColumn(ObsCausalError):
    def __init__(self, column: str, available: Optional[list] = None) -> None:
        msg = f"column {column!r} not found"
        if available:
            msg += f" (available: {', '.join(map(str, available))})"
        super().__init__(msg)
        self.column = column


class UnmappableValue(ObsCausalError):
    pass


class SolverError(ObsCausalError):
    pass


class ConfigError(ObsCausalError):
    pass


class DataFormatError(ObsCausalError):
    # Input file missing, unreadable, not UTF-8 or not parseable as CSV
    pass
