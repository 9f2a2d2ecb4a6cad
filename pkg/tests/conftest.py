from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import random_clusters, random_matrix  # noqa: E402

from gtsp_acs.instance import GtspInstance  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
TSPLIB_DIR = ROOT / "benchmarks" / "tsplib"

_acceptance_lines: list[str] = []


def random_instance(rng, m, min_size=1, max_size=3, low=1, high=100, name="rand") -> GtspInstance:
    clusters = random_clusters(rng, m, min_size, max_size)
    n = sum(len(c) for c in clusters)
    return GtspInstance(name, random_matrix(rng, n, low, high), tuple(map(tuple, clusters)))


def euclidean_instance(rng, m, min_size=1, max_size=3, name="euc") -> GtspInstance:
    clusters = random_clusters(rng, m, min_size, max_size)
    n = sum(len(c) for c in clusters)
    xy = rng.uniform(0, 1000, size=(n, 2))
    d = np.floor(np.sqrt(((xy[:, None] - xy[None]) ** 2).sum(-1)) + 0.5).astype(np.int64)
    return GtspInstance(name, d, tuple(map(tuple, clusters)), coords=xy, edge_weight_type="EUC_2D")


def random_tour(rng, instance: GtspInstance) -> list[int]:
    order = rng.permutation(instance.m)
    return [int(rng.choice(instance.clusters[c])) for c in order]


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line per acceptance criterion."""

    def record(criterion: int, ok: bool, detail: str) -> bool:
        line = f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        _acceptance_lines.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
