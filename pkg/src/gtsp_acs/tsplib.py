"""Reader and writer for TSPLIB files and their clustered GTSP extension.

The GTSP extension adds a ``GTSP_SETS: <m>`` header and a
``GTSP_SET_SECTION`` whose lines read ``set-id node node ... -1``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .instance import GtspInstance, InstanceError, cluster_count

SUPPORTED_TYPES = ("EUC_2D", "CEIL_2D", "GEO", "ATT", "EXPLICIT")
MATRIX_FORMATS = (
    "FULL_MATRIX",
    "UPPER_ROW",
    "LOWER_ROW",
    "UPPER_DIAG_ROW",
    "LOWER_DIAG_ROW",
)
_SECTIONS = (
    "NODE_COORD_SECTION",
    "EDGE_WEIGHT_SECTION",
    "GTSP_SET_SECTION",
    "DISPLAY_DATA_SECTION",
    "EOF",
)
_NAME_RE = re.compile(r"^(\d+)([A-Za-z]+)(\d+)$")


class TsplibParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = source or "<input>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


@dataclass
class TspData:
    """Raw content of a TSPLIB file."""

    name: str
    dimension: int
    edge_weight_type: str
    coords: np.ndarray | None = None
    matrix: np.ndarray | None = None
    edge_weight_format: str | None = None
    sets: list[list[int]] | None = None  # 0-based node ids, only for GTSP files
    declared_sets: int | None = None

    def distance_matrix(self) -> np.ndarray:
        if self.edge_weight_type == "EXPLICIT":
            assert self.matrix is not None
            return self.matrix
        assert self.coords is not None
        return distance_matrix(self.coords, self.edge_weight_type)


def _nint(x: np.ndarray) -> np.ndarray:
    # TSPLIB nint is floor(x + 0.5), not banker's rounding.
    return np.floor(x + 0.5).astype(np.int64)


def _geo_radians(c: np.ndarray) -> np.ndarray:
    deg = np.trunc(c)
    minutes = c - deg
    return math.pi * (deg + 5.0 * minutes / 3.0) / 180.0


def distance_matrix(coords: np.ndarray, edge_weight_type: str) -> np.ndarray:
    """Integer distance matrix following the TSPLIB conventions."""
    coords = np.asarray(coords, dtype=np.float64)
    if edge_weight_type in ("EUC_2D", "CEIL_2D", "ATT"):
        dx = coords[:, None, 0] - coords[None, :, 0]
        dy = coords[:, None, 1] - coords[None, :, 1]
        if edge_weight_type == "ATT":
            r = np.sqrt((dx * dx + dy * dy) / 10.0)
            t = _nint(r)
            return np.where(t < r, t + 1, t)
        d = np.sqrt(dx * dx + dy * dy)
        if edge_weight_type == "CEIL_2D":
            return np.ceil(d).astype(np.int64)
        return _nint(d)
    if edge_weight_type == "GEO":
        lat = _geo_radians(coords[:, 0])
        lon = _geo_radians(coords[:, 1])
        rrr = 6378.388
        q1 = np.cos(lon[:, None] - lon[None, :])
        q2 = np.cos(lat[:, None] - lat[None, :])
        q3 = np.cos(lat[:, None] + lat[None, :])
        arg = np.clip(0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3), -1.0, 1.0)
        d = (rrr * np.arccos(arg) + 1.0).astype(np.int64)
        np.fill_diagonal(d, 0)
        return d
    raise ValueError(f"unsupported EDGE_WEIGHT_TYPE {edge_weight_type}")


def _is_numeric(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _split_keyword(line: str) -> tuple[str, str | None]:
    if ":" in line:
        key, _, value = line.partition(":")
        return key.strip().upper(), value.strip()
    parts = line.split(None, 1)
    return parts[0].upper(), (parts[1].strip() if len(parts) > 1 else None)


def _matrix_from_values(values: list[float], n: int, fmt: str, line: int, source: str | None) -> np.ndarray:
    expected = {
        "FULL_MATRIX": n * n,
        "UPPER_ROW": n * (n - 1) // 2,
        "LOWER_ROW": n * (n - 1) // 2,
        "UPPER_DIAG_ROW": n * (n + 1) // 2,
        "LOWER_DIAG_ROW": n * (n + 1) // 2,
    }[fmt]
    if len(values) != expected:
        raise TsplibParseError(
            f"EDGE_WEIGHT_SECTION has {len(values)} values, {fmt} with DIMENSION {n} needs {expected}",
            line,
            source,
        )
    arr = np.asarray(values)
    if np.all(arr == np.round(arr)):
        arr = arr.astype(np.int64)
    if fmt == "FULL_MATRIX":
        return arr.reshape(n, n)
    mat = np.zeros((n, n), dtype=arr.dtype)
    if fmt == "UPPER_ROW":
        rows, cols = np.triu_indices(n, 1)
    elif fmt == "UPPER_DIAG_ROW":
        rows, cols = np.triu_indices(n, 0)
    elif fmt == "LOWER_ROW":
        rows, cols = np.tril_indices(n, -1)
    else:
        rows, cols = np.tril_indices(n, 0)
    # numpy's tri*_indices enumerate row-major, matching TSPLIB order
    mat[rows, cols] = arr
    mat[cols, rows] = arr
    return mat


def parse_tsplib(text: str, source: str | None = None) -> TspData:
    """Parse TSPLIB text (optionally carrying GTSP sets) into raw data.

    Raises :class:`TsplibParseError` naming the offending line.
    """
    lines = text.splitlines()
    header: dict[str, str] = {}
    coords: dict[int, tuple[float, float]] = {}
    weights: list[float] = []
    weights_line: int | None = None
    sets: list[list[int]] | None = None
    section = None
    pending_set: list[int] | None = None
    pending_line = 0

    def need_dim(lineno: int) -> int:
        if "DIMENSION" not in header:
            raise TsplibParseError("section appears before DIMENSION", lineno, source)
        return int(header["DIMENSION"])

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        first = line.split()[0].rstrip(":").upper()
        if first == "EOF":
            break
        if first in _SECTIONS:
            section = first
            if section in ("EDGE_WEIGHT_SECTION", "NODE_COORD_SECTION"):
                need_dim(lineno)
                if section == "EDGE_WEIGHT_SECTION":
                    weights_line = lineno
            elif section == "GTSP_SET_SECTION":
                sets = []
            continue
        if section is None or not _is_numeric(first):
            key, value = _split_keyword(line)
            if not value:
                raise TsplibParseError(f"malformed header line {line!r}", lineno, source)
            if key in ("DIMENSION", "GTSP_SETS"):
                try:
                    if int(value) < 1:
                        raise ValueError
                except ValueError:
                    raise TsplibParseError(f"{key} must be a positive integer, got {value!r}", lineno, source)
            header[key] = value
            section = None
            continue

        parts = line.split()
        if section == "NODE_COORD_SECTION":
            if len(parts) < 3:
                raise TsplibParseError(f"coordinate line needs 'id x y', got {line!r}", lineno, source)
            try:
                idx = int(parts[0])
                x, y = float(parts[1]), float(parts[2])
            except ValueError:
                raise TsplibParseError(f"non-numeric coordinate line {line!r}", lineno, source)
            n = need_dim(lineno)
            if not 1 <= idx <= n:
                raise TsplibParseError(f"node id {idx} outside 1..{n}", lineno, source)
            if idx in coords:
                raise TsplibParseError(f"node id {idx} listed twice", lineno, source)
            coords[idx] = (x, y)
        elif section == "EDGE_WEIGHT_SECTION":
            try:
                weights.extend(float(p) for p in parts)
            except ValueError:
                raise TsplibParseError(f"non-numeric edge weight line {line!r}", lineno, source)
        elif section == "GTSP_SET_SECTION":
            assert sets is not None
            try:
                vals = [int(p) for p in parts]
            except ValueError:
                raise TsplibParseError(f"non-integer set line {line!r}", lineno, source)
            if pending_set is None:
                pending_set, pending_line = [], lineno
                vals_iter = vals[1:]
                if vals and vals[0] != len(sets) + 1:
                    raise TsplibParseError(
                        f"expected set id {len(sets) + 1}, got {vals[0]}", lineno, source
                    )
            else:
                vals_iter = vals
            for v in vals_iter:
                if v == -1:
                    sets.append([u - 1 for u in pending_set])
                    pending_set = None
                    break
                pending_set.append(v)

    if pending_set is not None:
        raise TsplibParseError("set line is not terminated by -1", pending_line, source)
    if "DIMENSION" not in header:
        raise TsplibParseError("missing DIMENSION", None, source)
    n = int(header["DIMENSION"])
    ewt = header.get("EDGE_WEIGHT_TYPE", "").upper()
    if ewt not in SUPPORTED_TYPES:
        raise TsplibParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt or '(missing)'}", None, source)
    name = header.get("NAME", source and Path(source).stem or "unnamed").split()[0]

    data = TspData(name=name, dimension=n, edge_weight_type=ewt, sets=sets)
    if "GTSP_SETS" in header:
        data.declared_sets = int(header["GTSP_SETS"])
    if ewt == "EXPLICIT":
        fmt = header.get("EDGE_WEIGHT_FORMAT", "").upper()
        if fmt not in MATRIX_FORMATS:
            raise TsplibParseError(f"unsupported EDGE_WEIGHT_FORMAT {fmt or '(missing)'}", None, source)
        if weights_line is None:
            raise TsplibParseError("EXPLICIT instance without EDGE_WEIGHT_SECTION", None, source)
        data.edge_weight_format = fmt
        data.matrix = _matrix_from_values(weights, n, fmt, weights_line, source)
    if coords:
        if len(coords) != n:
            raise TsplibParseError(f"DIMENSION is {n} but {len(coords)} coordinates were given", None, source)
        data.coords = np.array([coords[i] for i in range(1, n + 1)], dtype=np.float64)
    elif ewt != "EXPLICIT":
        raise TsplibParseError("missing NODE_COORD_SECTION", None, source)
    return data


def _gtsp_name(base: str, m: int, n: int) -> str:
    if _NAME_RE.match(base):
        return base
    return f"{m}{base}" if base.endswith(str(n)) else f"{m}{base}{n}"


def to_instance(data: TspData, source: str | None = None) -> GtspInstance:
    """Build a :class:`GtspInstance` from parsed data that carries sets."""
    if data.sets is None:
        raise InstanceError(f"{source or data.name}: no GTSP_SET_SECTION")
    if data.declared_sets is not None and data.declared_sets != len(data.sets):
        raise InstanceError(
            f"{source or data.name}: GTSP_SETS declares {data.declared_sets} sets, section lists {len(data.sets)}"
        )
    return GtspInstance(
        name=_gtsp_name(data.name, len(data.sets), data.dimension),
        dist=data.distance_matrix(),
        clusters=tuple(tuple(s) for s in data.sets),
        coords=data.coords,
        edge_weight_type=data.edge_weight_type,
    )


def parse_gtsp(text: str, source: str | None = None) -> GtspInstance:
    return to_instance(parse_tsplib(text, source), source)


def load(path: str | Path) -> GtspInstance:
    """Read a GTSP file, or cluster a plain TSP file on the fly."""
    path = Path(path)
    data = parse_tsplib(path.read_text(), str(path))
    if data.sets is None:
        return cluster_instance(data)
    return to_instance(data, str(path))


def cluster_instance(tsp: TspData) -> GtspInstance:
    """Partition a TSP instance into ``ceil(n/5)`` clusters around dispersed centers.

    The first center is the node farthest from node 1; every further center
    maximizes its distance to the nearest center already chosen (node 1
    itself is only a starting point and may become a center later). Nodes
    join their nearest center. All ties go to the lowest index.
    """
    n = tsp.dimension
    if n < 10:
        raise ValueError(f"clustering needs at least 10 nodes, got {n}")
    m = cluster_count(n)
    d = np.asarray(tsp.distance_matrix(), dtype=np.float64)

    centers = [int(np.argmax(d[0]))]
    nearest = d[centers[0]].copy()
    nearest[centers] = -1.0
    for _ in range(m - 1):
        c = int(np.argmax(nearest))  # argmax returns the lowest index on ties
        centers.append(c)
        nearest = np.minimum(nearest, d[c])
        nearest[centers] = -1.0

    assign = np.argmin(d[:, centers], axis=1)
    assign[centers] = np.arange(m)
    clusters = tuple(tuple(np.flatnonzero(assign == k).tolist()) for k in range(m))
    return GtspInstance(
        name=_gtsp_name(tsp.name, m, n),
        dist=tsp.distance_matrix(),
        clusters=clusters,
        coords=tsp.coords,
        edge_weight_type=tsp.edge_weight_type,
    )


def write_gtsp(instance: GtspInstance, comment: str | None = None) -> str:
    """Serialize an instance to the clustered TSPLIB text format."""
    out = [
        f"NAME : {instance.name}",
        "TYPE : GTSP",
    ]
    if comment:
        out.append(f"COMMENT : {comment}")
    out += [f"DIMENSION : {instance.n}", f"GTSP_SETS : {instance.m}"]
    ewt = instance.edge_weight_type
    if instance.coords is not None and ewt not in (None, "EXPLICIT"):
        out.append(f"EDGE_WEIGHT_TYPE : {ewt}")
        out.append("NODE_COORD_SECTION")
        for i, (x, y) in enumerate(instance.coords, start=1):
            out.append(f"{i} {float(x)!r} {float(y)!r}")
    else:
        if not instance.is_integral:
            raise ValueError("explicit export supports integer distances only")
        out += ["EDGE_WEIGHT_TYPE : EXPLICIT", "EDGE_WEIGHT_FORMAT : FULL_MATRIX", "EDGE_WEIGHT_SECTION"]
        full = np.where(instance.dist < 0, 0, instance.dist)
        for row in full:
            out.append(" ".join(str(int(v)) for v in row))
    out.append("GTSP_SET_SECTION")
    for k, members in enumerate(instance.clusters, start=1):
        out.append(" ".join([str(k)] + [str(v + 1) for v in members] + ["-1"]))
    out.append("EOF")
    return "\n".join(out) + "\n"
