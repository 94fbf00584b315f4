from __future__ import annotations

import logging
import re
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Dict, FrozenSet, List, Literal, Mapping, NamedTuple, Optional, TextIO, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field

from schemas.errors import (
    ConfigError,
    DataFormatError,
    DegenerateStratum,
    DomainError,
    MissingColumn,
    UnmappableValue,
)
from schemas.tables import Counts2x2, StratifiedTable, Stratum

logger = logging.getLogger(__name__)

DEFAULT_TRUE = frozenset({"1", "yes", "y", "true", "t"})
DEFAULT_FALSE = frozenset({"0", "no", "n", "false", "f"})
MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none", "."})
STRATUM_SEPARATOR = "|"

_DERIVE_RE = re.compile(r"^\s*(?P<name>\w+)\s*=\s*(?P<source>\w+)\s*(?P<op><=|>=|==|<|>)\s*(?P<constant>\S+)\s*$")

Source = Union[str, TextIO]


class DerivedColumn(BaseModel):
    # new_col = source OP constant, evaluated to 1.0/0.0 (NaN where the source is missing)
    model_config = ConfigDict(frozen=True)

    name: str
    source: str
    op: Literal["<", "<=", ">", ">=", "=="]
    constant: str

    @classmethod
    def parse(cls, expr: str) -> "DerivedColumn":
        m = _DERIVE_RE.match(expr)
        if m is None:
            raise ConfigError(f"cannot parse derived column {expr!r}; expected 'new_col = col OP constant'")
        return cls(**m.groupdict())


class MicrodataSpec(BaseModel):
    """Which CSV columns hold exposure, outcome and covariates, and how their values map to 0/1."""

    model_config = ConfigDict(frozen=True)

    exposure_column: str
    outcome_column: str
    covariate_columns: List[str] = Field(default_factory=list)
    true_values: FrozenSet[str] = DEFAULT_TRUE
    false_values: FrozenSet[str] = DEFAULT_FALSE
    missing_policy: Literal["drop", "strict"] = "drop"
    derived: List[DerivedColumn] = Field(default_factory=list)


class Tabulation(NamedTuple):
    counts: Counts2x2
    excluded: int
    rows: int


class StratifiedTabulation(NamedTuple):
    table: StratifiedTable
    excluded: int
    rows: int


def _split_list(raw: Optional[str]) -> List[str]:
    return [part.strip() for part in (raw or "").split(",") if part.strip()]


def load_microdata_spec(path: str) -> MicrodataSpec:
    """Read a flat KEY=value spec file (dotenv syntax).

    Keys: EXPOSURE, OUTCOME, COVARIATES, TRUE_VALUES, FALSE_VALUES, MISSING_POLICY and any
    number of DERIVE_<name> entries holding 'new_col = col OP constant'.
    """
    if not Path(path).is_file():
        raise ConfigError(f"{path}: column spec file not found")
    values = {k.upper(): v for k, v in dotenv_values(path).items()}
    for key in ("EXPOSURE", "OUTCOME"):
        if not values.get(key):
            raise ConfigError(f"{path}: {key} is required")
    policy = (values.get("MISSING_POLICY") or "drop").strip().lower()
    if policy not in ("drop", "strict"):
        raise ConfigError(f"{path}: MISSING_POLICY must be drop or strict, got {policy!r}")

    true_values = frozenset(v.lower() for v in _split_list(values.get("TRUE_VALUES"))) or DEFAULT_TRUE
    false_values = frozenset(v.lower() for v in _split_list(values.get("FALSE_VALUES"))) or DEFAULT_FALSE
    if true_values & false_values:
        raise ConfigError(f"{path}: values mapped both ways: {sorted(true_values & false_values)}")

    derived = [DerivedColumn.parse(v) for k, v in sorted(values.items()) if k.startswith("DERIVE_") and v]
    return MicrodataSpec(
        exposure_column=values["EXPOSURE"].strip(),
        outcome_column=values["OUTCOME"].strip(),
        covariate_columns=_split_list(values.get("COVARIATES")),
        true_values=true_values,
        false_values=false_values,
        missing_policy=policy,
        derived=derived,
    )


def _read(source: Source) -> pd.DataFrame:
    name = source if isinstance(source, str) else "<stream>"
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"{name}: cannot read ({exc.strerror or exc})") from exc
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{name}: not valid UTF-8 at byte {exc.start}") from exc
    except pd.errors.EmptyDataError as exc:
        raise DataFormatError(f"{name}: empty file, no header row") from exc
    except pd.errors.ParserError as exc:
        raise DataFormatError(f"{name}: malformed CSV ({exc})") from exc
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame


def _require(frame: pd.DataFrame, column: str) -> pd.Series:
    if column not in frame.columns:
        raise MissingColumn(column, list(frame.columns))
    return frame[column].str.strip()


def _derive(frame: pd.DataFrame, d: DerivedColumn) -> pd.Series:
    raw = _require(frame, d.source)
    missing = raw.str.lower().isin(MISSING_TOKENS)
    try:
        const = float(d.constant)
    except ValueError:
        if d.op != "==":
            raise ConfigError(f"derived column {d.name!r}: {d.op} needs a numeric constant, got {d.constant!r}")
        hit = raw == d.constant
    else:
        numeric = pd.to_numeric(raw, errors="coerce")
        missing |= numeric.isna()
        ops = {
            "<": numeric < const,
            "<=": numeric <= const,
            ">": numeric > const,
            ">=": numeric >= const,
            "==": numeric == const,
        }
        hit = ops[d.op]
    return pd.Series(np.where(missing, np.nan, np.where(hit, 1.0, 0.0)), index=frame.index)


def _binary(values: pd.Series, spec: MicrodataSpec) -> pd.Series:
    # 1/0 as floats, NaN for anything the mapping does not resolve
    lowered = values.str.lower()
    out = pd.Series(np.nan, index=values.index)
    out[lowered.isin(spec.true_values)] = 1.0
    out[lowered.isin(spec.false_values)] = 0.0
    return out


def _resolve(source: Source, spec: MicrodataSpec) -> pd.DataFrame:
    """Columns e, d (0/1) and the stratum label for every row that resolves, plus a `keep` mask."""
    frame = _read(source)
    derived: Dict[str, pd.Series] = {}
    for rule in spec.derived:
        derived[rule.name] = _derive(frame, rule)
        # Covariate labels read the string form
        frame[rule.name] = derived[rule.name].map({1.0: "1", 0.0: "0"}).fillna("")

    def indicator(column: str) -> pd.Series:
        # Derived columns are already 0/1 and bypass the TRUE/FALSE value mapping
        if column in derived:
            return derived[column]
        return _binary(_require(frame, column), spec)

    e = indicator(spec.exposure_column)
    d = indicator(spec.outcome_column)
    covariates = [_require(frame, c) for c in spec.covariate_columns]

    keep = e.notna() & d.notna()
    for cov in covariates:
        keep &= ~cov.str.lower().isin(MISSING_TOKENS)

    if spec.missing_policy == "strict" and not keep.all():
        row = int(np.flatnonzero(~keep.to_numpy())[0])
        raise UnmappableValue(
            f"row {row + 2}: cannot resolve "
            f"{spec.exposure_column}={frame[spec.exposure_column].iloc[row]!r}, "
            f"{spec.outcome_column}={frame[spec.outcome_column].iloc[row]!r}"
        )

    label = covariates[0] if covariates else pd.Series("", index=frame.index)
    for cov in covariates[1:]:
        label = label + STRATUM_SEPARATOR + cov
    return pd.DataFrame({"e": e, "d": d, "label": label, "keep": keep})


def _counts(rows: pd.DataFrame) -> Counts2x2:
    e = rows["e"].to_numpy() == 1.0
    d = rows["d"].to_numpy() == 1.0
    return Counts2x2(
        x01=int(np.count_nonzero(~e & d)),
        x11=int(np.count_nonzero(e & d)),
        x00=int(np.count_nonzero(~e & ~d)),
        x10=int(np.count_nonzero(e & ~d)),
    )


def load_counts(source: Source, spec: MicrodataSpec) -> Tabulation:
    resolved = _resolve(source, spec)
    excluded = int((~resolved["keep"]).sum())
    if excluded:
        logger.warning("excluded %d of %d rows with unresolved values", excluded, len(resolved))
    return Tabulation(counts=_counts(resolved[resolved["keep"]]), excluded=excluded, rows=len(resolved))


def load_stratified(source: Source, spec: MicrodataSpec, merge: Optional[Mapping[str, str]] = None) -> StratifiedTabulation:
    """One stratum per distinct covariate value combination, in order of first appearance.

    `merge` relabels strata before the interior check, so small strata can be pooled by name.
    """
    if not spec.covariate_columns:
        raise ConfigError("stratified loading needs at least one covariate column")
    resolved = _resolve(source, spec)
    excluded = int((~resolved["keep"]).sum())
    if excluded:
        logger.warning("excluded %d of %d rows with unresolved values", excluded, len(resolved))

    kept = resolved[resolved["keep"]]
    strata: Dict[str, Counts2x2] = {}
    for label, rows in kept.groupby("label", sort=False):
        strata[str(label)] = _counts(rows)
    if not strata:
        raise DomainError("no rows left after excluding unresolved values")

    table = StratifiedTable(strata=[Stratum(label=k, counts=v) for k, v in strata.items()])
    if merge:
        table = table.merged(merge)
    check_interior(table)
    return StratifiedTabulation(table=table, excluded=excluded, rows=len(resolved))


def check_interior(table: StratifiedTable) -> None:
    # Every stratum needs both exposure levels and both outcome levels
    for s in table.strata:
        c = s.counts
        if c.exposed == 0 or c.unexposed == 0:
            raise DegenerateStratum(s.label, f"P(e=1|c)={c.exposed / c.n:.4g}")
        cases = c.x01 + c.x11
        if cases == 0 or cases == c.n:
            raise DegenerateStratum(s.label, f"P(d=1|c)={cases / c.n:.4g}")


def ipw_hospitalized_adjust(deaths: int, survivors: int, effectiveness: float) -> int:
    """Survivor count after scaling the hospitalised cohort by 1 / (1 - effectiveness).

    Rounds half away from zero; at effectiveness 0.9 this is exactly (a + b) * 10 - a.
    """
    if not (0.0 <= effectiveness < 1.0):
        raise DomainError(f"effectiveness must lie in [0, 1), got {effectiveness}")
    if deaths < 0 or survivors < 0:
        raise DomainError(f"counts must be nonnegative, got deaths={deaths}, survivors={survivors}")
    # Decimal keeps 1 / (1 - 0.9) at exactly 10
    scale = Decimal(1) / (Decimal(1) - Decimal(str(effectiveness)))
    total = (Decimal(deaths + survivors) * scale).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    return int(total) - deaths
