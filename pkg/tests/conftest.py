from __future__ import annotations

from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def goldens_dir() -> Path:
    return REPO_ROOT / "goldens"


@pytest.fixture(scope="session")
def assets_dir() -> Path:
    return REPO_ROOT / "assets"
