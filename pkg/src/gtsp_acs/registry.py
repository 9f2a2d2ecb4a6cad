"""Best known objective values and published reference numbers."""

from __future__ import annotations

import csv
import io
from importlib import resources
from pathlib import Path


class BestKnownRegistry:
    """Instance name -> best known objective value.

    Names are matched case-insensitively (TSPLIB files write kroA200, tables
    often kroa200). Unknown names give ``None`` rather than a sentinel number.
    """

    def __init__(self, table: dict[str, int] | None = None):
        self._table: dict[str, int] = {}
        for name, value in (table or {}).items():
            self.add(name, value)

    def add(self, name: str, value: int) -> None:
        if value <= 0:
            raise ValueError(f"best known value for {name} must be positive, got {value}")
        self._table[name.lower()] = value

    def get(self, name: str) -> int | None:
        return self._table.get(name.lower())

    def __contains__(self, name: str) -> bool:
        return name.lower() in self._table

    def __len__(self) -> int:
        return len(self._table)

    def names(self) -> list[str]:
        return list(self._table)

    @classmethod
    def from_csv(cls, source: str | Path | io.TextIOBase) -> "BestKnownRegistry":
        if isinstance(source, (str, Path)):
            with open(source, newline="") as fh:
                return cls._read(fh)
        return cls._read(source)

    @classmethod
    def _read(cls, fh) -> "BestKnownRegistry":
        reg = cls()
        for row in csv.DictReader(line for line in fh if not line.startswith("#")):
            reg.add(row["name"].strip(), int(row["best"]))
        return reg

    @classmethod
    def default(cls) -> "BestKnownRegistry":
        with resources.files("gtsp_acs.data").joinpath("best_known.csv").open() as fh:
            return cls._read(fh)


def published_reference() -> dict[str, dict[str, float | None]]:
    """Published per-instance numbers, keyed by lower-case instance name. Display only."""
    out: dict[str, dict[str, float | None]] = {}
    with resources.files("gtsp_acs.data").joinpath("published_reference.csv").open() as fh:
        for row in csv.DictReader(line for line in fh if not line.startswith("#")):
            name = row.pop("instance").lower()
            out[name] = {k: (float(v) if v else None) for k, v in row.items()}
    return out
