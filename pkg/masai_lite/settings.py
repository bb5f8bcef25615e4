"""
Environment-driven settings.

A local `.env` file is honoured through python-dotenv, the same way the demo
scripts pick up their API keys. Command-line flags always win over values
found here.
"""
import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from masai_lite.errors import UsageError

load_dotenv()

THREADS_ENV = "MASAI_LITE_THREADS"
LOG_LEVEL_ENV = "MASAI_LITE_LOG_LEVEL"

# logging.getLevelNamesMapping() is Python 3.11+; same result on 3.10.
_level_names_mapping = getattr(
    logging, "getLevelNamesMapping", lambda: dict(logging._nameToLevel)
)


class Settings(BaseModel):
    threads: int = Field(1, ge=1, description="Worker processes used by `map` and `bench`.")
    log_level: str = Field("WARNING", description="Root log level when no -v flag is given.")

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in _level_names_mapping():
            raise ValueError(f"unknown log level {value!r}")
        return level


def get_settings() -> Settings:
    """Reads the settings from the environment, validating every value."""
    raw = {}
    if os.getenv(THREADS_ENV):
        raw["threads"] = os.environ[THREADS_ENV]
    if os.getenv(LOG_LEVEL_ENV):
        raw["log_level"] = os.environ[LOG_LEVEL_ENV]
    try:
        return Settings(**raw)
    except ValidationError as e:
        raise UsageError(f"invalid environment configuration: {e}") from e
