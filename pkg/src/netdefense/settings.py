from __future__ import annotations

from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="NETDEFENSE_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    lp_backend: Literal["highs", "simplex"] = "highs"
    oracle_limit_n: int = Field(default=14, ge=1, le=24)
    log_level: str = "WARNING"


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
