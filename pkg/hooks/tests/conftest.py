from pathlib import Path

import pytest


@pytest.fixture
def oracle_path(tmp_path) -> Path:
    return tmp_path / "events.jsonl"
