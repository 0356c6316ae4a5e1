# conftest.py
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from kernel import StickyParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def params():
    return StickyParams(beta=1.0)


@pytest.fixture(autouse=True)
def artifact_dir(tmp_path, monkeypatch):
    """Keep CLI artifacts out of the working tree."""
    monkeypatch.setenv("STICKY_OUTPUT_DIR", str(tmp_path / "runs"))
    return tmp_path / "runs"
