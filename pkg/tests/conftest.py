from pathlib import Path

import pytest

from builders import DATA_DIR


@pytest.fixture
def cmdi_repo() -> Path:
    return DATA_DIR / "cmdi_repo"


@pytest.fixture
def benign_repo() -> Path:
    return DATA_DIR / "benign_repo"


@pytest.fixture
def e2e_script() -> Path:
    return DATA_DIR / "scripted" / "e2e_cmdi.json"
