"""Solved coefficient vectors, stored as JSONL next to sweep results."""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np


SOLUTIONS_FILE = "solutions.jsonl"


@dataclass
class SolutionRecord:
    """One solved (problem, basis, n, m) cell."""

    problem: str
    basis: str
    n: int
    m: int
    multi_indices: list[list[int]]
    xi: list[float]
    max_test_error: Optional[float] = None
    seed: int = 0
    timestamp: float = field(default_factory=time.time)

    @property
    def coefficients(self) -> np.ndarray:
        return np.asarray(self.xi, dtype=float)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "basis": self.basis,
            "n": self.n,
            "m": self.m,
            "multi_indices": [list(t) for t in self.multi_indices],
            "xi": [float(v) for v in self.xi],
            "max_test_error": self.max_test_error,
            "seed": self.seed,
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_dict(data: dict) -> "SolutionRecord":
        return SolutionRecord(
            problem=data["problem"],
            basis=data["basis"],
            n=int(data["n"]),
            m=int(data["m"]),
            multi_indices=[list(t) for t in data["multi_indices"]],
            xi=[float(v) for v in data["xi"]],
            max_test_error=data.get("max_test_error"),
            seed=int(data.get("seed", 0)),
            timestamp=data.get("timestamp", 0.0),
        )

    @staticmethod
    def from_report(report, seed: int = 0) -> "SolutionRecord":
        return SolutionRecord(
            problem=report.problem,
            basis=report.basis,
            n=report.n,
            m=report.m,
            multi_indices=[list(t) for t in report.multi_indices],
            xi=list(np.asarray(report.xi, dtype=float)),
            max_test_error=report.max_test_error,
            seed=seed,
        )


def solutions_path(directory: Path) -> Path:
    return Path(directory) / SOLUTIONS_FILE


def append_records(directory: Path, records: list[SolutionRecord]) -> Path:
    path = solutions_path(directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a") as f:
        for r in records:
            f.write(json.dumps(r.to_dict()) + "\n")
    return path


def read_records(directory: Path) -> list[SolutionRecord]:
    """All records in file order; malformed lines are skipped."""
    path = solutions_path(directory)
    if not path.exists():
        return []
    records = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            try:
                records.append(SolutionRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                continue
    return records


def find_record(
    directory: Path,
    problem: str,
    basis: Optional[str] = None,
    n: Optional[int] = None,
    m: Optional[int] = None,
) -> Optional[SolutionRecord]:
    """Most recent record matching the filters."""
    for r in reversed(read_records(directory)):
        if r.problem != problem:
            continue
        if basis is not None and r.basis != basis:
            continue
        if n is not None and r.n != n:
            continue
        if m is not None and r.m != m:
            continue
        return r
    return None
