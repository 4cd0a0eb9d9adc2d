"""Pytest configuration for connsum test imports."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
for path in (ROOT, ROOT / "tests"):
    if str(path) not in sys.path:
        sys.path.insert(0, str(path))

from connsum.config import get_settings  # noqa: E402

EXAMPLES = ROOT / "data" / "examples"


@pytest.fixture(autouse=True)
def fresh_settings():
    """Drop cached settings so environment overrides apply per test."""

    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def examples_dir() -> Path:
    return EXAMPLES
