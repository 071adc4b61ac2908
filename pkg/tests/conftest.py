import json
from pathlib import Path

import pytest

from src.config import CONFIG
from src.instability_lab import sweep

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def calibration():
    with open(FIXTURES / "calibration.json", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture(scope="session")
def calibration_certs():
    """Certificates over the calibration set at default resolution, keyed by a."""
    a_values = CONFIG["certify"]["calibration_a"]
    return {c.a: c for c in sweep(a_values, workers=4)}
