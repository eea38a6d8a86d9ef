"""Machine introspection and worker-count selection."""

import os
import socket
from dataclasses import dataclass
from typing import Optional

import psutil


@dataclass
class SystemStats:
    hostname: str
    cpu_count: int
    ram_total_gb: float
    ram_free_gb: float


def get_cpu_count() -> int:
    """Get number of CPU cores."""
    return psutil.cpu_count(logical=True) or 1


def get_system_stats() -> SystemStats:
    mem = psutil.virtual_memory()
    return SystemStats(
        hostname=socket.gethostname(),
        cpu_count=get_cpu_count(),
        ram_total_gb=mem.total / (1024**3),
        ram_free_gb=mem.available / (1024**3),
    )


def thread_limit(requested: Optional[int] = None) -> int:
    """Worker count for sweeps.

    ``TFC_THREADS`` wins over ``requested``; zero or missing means all cores.
    """
    env = os.environ.get("TFC_THREADS")
    if env:
        try:
            requested = int(env)
        except ValueError:
            pass
    if not requested or requested < 1:
        return get_cpu_count()
    return requested
