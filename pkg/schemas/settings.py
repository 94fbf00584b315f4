from __future__ import annotations

import logging
import os
from typing import Mapping, Optional

from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError, field_validator

from schemas.errors import ConfigError

ENV_PREFIX = "OBSCAUSAL_"


class Settings(BaseModel):
    # Defaults for every command; CLI flags win over these
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    samples: PositiveInt = 100_000
    tau_tol: float = Field(1e-4, gt=0.0)
    workers: PositiveInt = 1
    log_level: str = "WARNING"
    prevalence_tolerance: float = Field(0.05, ge=0.0, le=1.0)

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, v: str) -> str:
        level = v.strip().upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"unknown log level {v!r}")
        return level


def load_settings(environ: Optional[Mapping[str, str]] = None) -> Settings:
    """Settings from OBSCAUSAL_* variables, after loading the nearest .env above the working directory."""
    if environ is None:
        load_dotenv(find_dotenv(usecwd=True))
        environ = os.environ
    raw = {
        key[len(ENV_PREFIX):].lower(): value
        for key, value in environ.items()
        if key.startswith(ENV_PREFIX) and value != ""
    }
    unknown = sorted(set(raw) - set(Settings.model_fields))
    if unknown:
        raise ConfigError(f"unknown setting(s): {', '.join(ENV_PREFIX + u.upper() for u in unknown)}")
    try:
        return Settings(**raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
