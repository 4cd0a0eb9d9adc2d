"""Centralised library configuration loaded from environment variables."""

from __future__ import annotations

from functools import lru_cache

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """Library settings schema loaded from environment variables.

    Params:
        None: Values are read from `CONNSUM_*` variables and an optional `.env` file.
    Returns:
        Settings: Parsed and validated settings object.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="CONNSUM_",
        extra="ignore",
    )

    LOG_LEVEL: str = "WARNING"
    LOG_FILE: str = ""

    UNFOLD_NODE_LIMIT: int = 250_000
    MATCHER_DEPTH_WINDOW: int = 0


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return a cached settings instance for process-wide reuse.

    Params:
        None: Reads values from environment variables and `.env` if present.
    Returns:
        Settings: Cached configuration object.
    """

    return Settings()
