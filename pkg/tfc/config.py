"""Configuration handling for the TFC solver."""

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml


def tfc_dir() -> Path:
    """Base directory, ``$TFC_HOME`` or ``~/.tfc``."""
    home = os.environ.get("TFC_HOME")
    return Path(home) if home else Path.home() / ".tfc"


def config_file() -> Path:
    return tfc_dir() / "config.yaml"


@dataclass
class TfcConfig:
    """User defaults for sweeps and checks."""

    default_basis: str = "chebyshev"
    n_values: list[int] = field(default_factory=lambda: [5, 10, 15, 20, 25, 30])
    m_values: list[int] = field(default_factory=lambda: [5, 10, 15, 20, 25])
    repeats: int = 3
    threads: int = 0  # 0 = all cores

    # Gauss-Newton
    max_iter: int = 30
    step_tol: float = 1e-14
    res_tol: float = 1e-14

    test_points: int = 100
    results_dir: str = "results"


def ensure_tfc_dir() -> Path:
    """Ensure the configuration directory exists."""
    path = tfc_dir()
    path.mkdir(parents=True, exist_ok=True)
    return path


def load_config() -> TfcConfig:
    """Load configuration from file, or return defaults."""
    path = config_file()
    if not path.exists():
        return TfcConfig()
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    known = {f.name for f in fields(TfcConfig)}
    return TfcConfig(**{k: v for k, v in data.items() if k in known})


def save_config(config: TfcConfig) -> None:
    ensure_tfc_dir()
    with open(config_file(), "w") as f:
        yaml.safe_dump(asdict(config), f, default_flow_style=False, sort_keys=False)


def get_or_create_config() -> TfcConfig:
    """Get existing config or create and save a new one."""
    if config_file().exists():
        return load_config()
    config = TfcConfig()
    save_config(config)
    return config
