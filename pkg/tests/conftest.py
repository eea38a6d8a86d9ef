import numpy as np
import pytest


@pytest.fixture(autouse=True)
def tfc_home(tmp_path, monkeypatch):
    """Keep configuration and results out of the real home directory."""
    home = tmp_path / "tfc-home"
    monkeypatch.setenv("TFC_HOME", str(home))
    monkeypatch.delenv("TFC_THREADS", raising=False)
    return home


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
