from pathlib import Path

import pytest

from autotab.table import read_csv

REPO = Path(__file__).resolve().parent.parent
HEART_CSV = REPO / "data" / "heart_synth.csv"


@pytest.fixture(scope="session")
def heart_csv() -> Path:
    return HEART_CSV


@pytest.fixture(scope="session")
def heart_table():
    return read_csv(HEART_CSV, name="heart")
