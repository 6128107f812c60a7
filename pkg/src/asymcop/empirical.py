"""Bivariate sample ingestion and the empirical copula."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .core import CopulaSpec
from .grid import Grid, GridFunction


class DataError(ValueError):
    """Malformed sample file."""


@dataclass(frozen=True, eq=False)
class SampleSet:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise DataError("x and y must have the same length")
        if x.size < 2:
            raise DataError(f"need at least 2 observations, got {x.size}")
        if np.isnan(x).any() or np.isnan(y).any():
            raise DataError("samples must not contain NaN")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.x.size

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def swapped(self) -> "SampleSet":
        return SampleSet(self.y, self.x)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _column_index(col, header: list[str] | None, width: int) -> int:
    if isinstance(col, str) and not col.lstrip("-").isdigit():
        if header is None:
            raise DataError(f"column {col!r} given by name but the file has no header")
        names = [h.strip() for h in header]
        if col not in names:
            raise DataError(f"column {col!r} not found; header is {names}")
        return names.index(col)
    idx = int(col)
    if not 0 <= idx < width:
        raise DataError(f"column index {idx} out of range for {width} columns")
    return idx


def load_csv(path, x_col=0, y_col=1) -> SampleSet:
    """Read two columns of a comma-separated file.

    A first row that does not parse as numbers is taken as a header. Columns
    are selected by 0-based index or by header name.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = None
    start = 0
    if rows and not all(_is_number(c) for c in rows[0] if c.strip()):
        header, start = rows[0], 1
    width = len(header) if header else max((len(r) for r in rows), default=0)
    ix = _column_index(x_col, header, width)
    iy = _column_index(y_col, header, width)
    xs, ys = [], []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            a, b = row[ix].strip(), row[iy].strip()
        except IndexError:
            raise DataError(f"line {lineno}: missing value") from None
        if not a or not b:
            raise DataError(f"line {lineno}: missing value")
        try:
            xv, yv = float(a), float(b)
        except ValueError:
            raise DataError(f"line {lineno}: cannot parse {row!r} as numbers") from None
        if math.isnan(xv) or math.isnan(yv):
            raise DataError(f"line {lineno}: missing value (NaN)")
        xs.append(xv)
        ys.append(yv)
    if len(xs) < 2:
        raise DataError(f"{path}: need at least 2 valid rows, found {len(xs)}")
    return SampleSet(np.array(xs), np.array(ys))


def pseudo_observations(s: SampleSet) -> tuple[np.ndarray, np.ndarray]:
    """Average ranks scaled by ``1 / (m + 1)``."""
    return rankdata(s.x) / (s.m + 1), rankdata(s.y) / (s.m + 1)


def empirical_copula(s: SampleSet, grid: Grid | None = None) -> CopulaSpec:
    """Empirical copula at the grid nodes, clamped into the Frechet envelope."""
    grid = grid or Grid(64)
    n = grid.n
    pu, pv = pseudo_observations(s)
    # first node index with node >= pseudo-observation
    iu = np.searchsorted(grid.u, pu, side="left")
    iv = np.searchsorted(grid.v, pv, side="left")
    counts = np.zeros((n + 1, n + 1), dtype=np.int64)
    np.add.at(counts, (iu, iv), 1)
    C = counts.cumsum(0).cumsum(1) / s.m
    U, V = grid.mesh()
    C = np.clip(C, np.maximum(U + V - 1.0, 0.0), np.minimum(U, V))
    return CopulaSpec.from_table(GridFunction(grid, C), "empirical")
