"""Point datasets: road-network coordinate files, binary caches, splits,
and synthetic generators.

The text format is the classic coordinate listing: optional comment lines
starting with "c", one optional "p aux sp co N" header, and one
"v <id> <x> <y>" line per point.  Coordinates survive a serialization
round trip bit for bit (repr emits the shortest exact form).
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import CountMismatch, MalformedLine, SpecTooLarge
from .geometry import Point2, Rect

CACHE_MAGIC: bytes = b"RKNNPT01"


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray  # (n, 2) float64
    name: str = ""

    def __len__(self) -> int:
        return len(self.points)


def parse_dimacs_co(lines: Iterable[str], name: str = "") -> Dataset:
    pts: list[tuple[float, float]] = []
    declared: int | None = None
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "c":
            continue
        if tok[0] == "p":
            if declared is not None:
                raise MalformedLine(line_no, raw)
            if len(tok) != 5 or tok[1:4] != ["aux", "sp", "co"]:
                raise MalformedLine(line_no, raw)
            try:
                declared = int(tok[4])
            except ValueError:
                raise MalformedLine(line_no, raw) from None
            if declared < 0:
                raise MalformedLine(line_no, raw)
            continue
        if tok[0] == "v":
            if len(tok) != 4:
                raise MalformedLine(line_no, raw)
            try:
                int(tok[1])
                x = float(tok[2])
                y = float(tok[3])
            except ValueError:
                raise MalformedLine(line_no, raw) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise MalformedLine(line_no, raw)
            pts.append((x, y))
            continue
        raise MalformedLine(line_no, raw)
    if declared is not None and declared != len(pts):
        raise CountMismatch(f"header declares {declared} points, found {len(pts)}")
    return Dataset(np.array(pts, dtype=np.float64).reshape(-1, 2), name)


def load_co(path: str | Path) -> Dataset:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        return parse_dimacs_co(fh, name=path.stem)


def serialize_co(ds: Dataset) -> str:
    out = [f"p aux sp co {len(ds.points)}"]
    for i, (x, y) in enumerate(ds.points, start=1):
        out.append(f"v {i} {float(x)!r} {float(y)!r}")
    return "\n".join(out) + "\n"


def save_cache(path: str | Path, ds: Dataset) -> None:
    pts = np.ascontiguousarray(ds.points, dtype="<f8")
    with Path(path).open("wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<Q", len(pts)))
        fh.write(pts.tobytes())


def load_cache(path: str | Path) -> Dataset:
    path = Path(path)
    blob = path.read_bytes()
    if blob[:8] != CACHE_MAGIC:
        raise ValueError(f"{path}: not a point cache (bad magic)")
    if len(blob) < 16:
        raise ValueError(f"{path}: truncated cache header")
    (count,) = struct.unpack("<Q", blob[8:16])
    want = 16 + count * 16
    if len(blob) != want:
        raise ValueError(f"{path}: cache payload is {len(blob)} bytes, "
                         f"expected {want}")
    pts = np.frombuffer(blob, dtype="<f8", offset=16).reshape(-1, 2).copy()
    return Dataset(pts, name=path.stem)


def is_cache(path: str | Path) -> bool:
    try:
        with Path(path).open("rb") as fh:
            return fh.read(8) == CACHE_MAGIC
    except OSError:
        return False


def load_points(path: str | Path) -> Dataset:
    return load_cache(path) if is_cache(path) else load_co(path)


@dataclass(frozen=True)
class SplitSpec:
    n_facilities: int
    seed: int


def split_facilities(ds: Dataset, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Draw facilities without replacement in sampled order; users are the
    remaining points in dataset order."""
    n = len(ds.points)
    if spec.n_facilities > n:
        raise SpecTooLarge(f"asked for {spec.n_facilities} facilities "
                           f"from {n} points")
    rng = np.random.default_rng(spec.seed)
    chosen = rng.choice(n, size=spec.n_facilities, replace=False)
    mask = np.zeros(n, dtype=bool)
    mask[chosen] = True
    return ds.points[chosen].copy(), ds.points[~mask].copy()


DEFAULT_GEN_RECT = Rect(Point2(0.0, 0.0), Point2(10_000.0, 10_000.0))


def gen_synthetic(n: int, kind: str, seed: int, rect: Rect | None = None,
                  n_clusters: int = 10,
                  cluster_std: float | None = None) -> Dataset:
    """Seed-deterministic points inside rect: independent uniform draws, or
    Gaussian blobs (std = cluster_std, default 1% of the longer side) around
    uniformly placed centers, clamped to rect."""
    if rect is None:
        rect = DEFAULT_GEN_RECT
    rng = np.random.default_rng(seed)
    lo = np.array([rect.min.x, rect.min.y])
    hi = np.array([rect.max.x, rect.max.y])
    if kind == "uniform":
        pts = rng.uniform(lo, hi, size=(n, 2))
    elif kind == "clusters":
        centers = rng.uniform(lo, hi, size=(n_clusters, 2))
        std = cluster_std if cluster_std is not None \
            else 0.01 * max(hi[0] - lo[0], hi[1] - lo[1])
        assign = rng.integers(0, n_clusters, size=n)
        pts = centers[assign] + rng.normal(0.0, std, size=(n, 2))
        np.clip(pts, lo, hi, out=pts)
    else:
        raise ValueError(f"unknown synthetic kind {kind!r}")
    return Dataset(pts, name=f"synthetic-{kind}-{n}-{seed}")
