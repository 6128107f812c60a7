"""Uniform dyadic grids on the unit square, quadrature and L^p norms.

Functions are stored at the ``(n+1) x (n+1)`` nodes of the grid and
integrated cell by cell, each cell carrying the mean of its four corners.
``values[i, j]`` holds ``f(u_i, v_j)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


class EvaluationError(ValueError):
    """An evaluator failed, or produced a non-finite value, at a grid node."""

    def __init__(self, message: str, node: tuple[float, float] | None = None):
        super().__init__(message)
        self.node = node


def is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 2 and (n & (n - 1)) == 0


def parse_p(p) -> float:
    """Normalise an exponent: accepts numbers and the strings 'inf'/'infinity'."""
    if isinstance(p, str):
        p = math.inf if p.strip().lower() in ("inf", "infinity", "oo") else float(p)
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ValueError(f"p must satisfy p >= 1 or p = inf, got {p}")
    return p


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``n`` cells per axis, ``n`` a power of two.

    The default box is the unit square. Other boxes are only used to tabulate
    joint distribution functions on their own (x, y) domain.
    """

    n: int
    x_range: tuple[float, float] = (0.0, 1.0)
    y_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not is_power_of_two(self.n):
            raise ValueError(f"grid resolution must be a power of two >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("x_range", "y_range"):
            lo, hi = (float(a) for a in getattr(self, name))
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"{name} must be a finite increasing pair, got {(lo, hi)}")
            object.__setattr__(self, name, (lo, hi))

    @property
    def level(self) -> int:
        return self.n.bit_length() - 1

    @property
    def is_unit(self) -> bool:
        return self.x_range == (0.0, 1.0) and self.y_range == (0.0, 1.0)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def _axis(self, lo: float, hi: float) -> np.ndarray:
        frac = np.arange(self.n + 1) / self.n
        if (lo, hi) == (0.0, 1.0):
            return frac
        pts = lo + (hi - lo) * frac
        pts[-1] = hi
        return pts

    @property
    def u(self) -> np.ndarray:
        return self._axis(*self.x_range)

    @property
    def v(self) -> np.ndarray:
        return self._axis(*self.y_range)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.u, self.v, indexing="ij")

    def node(self, i: int, j: int) -> tuple[float, float]:
        return float(self.u[i]), float(self.v[j])

    def index_of(self, u: float, v: float) -> tuple[int, int]:
        """Node index of an exact grid coordinate pair."""
        i = int(round((u - self.x_range[0]) / (self.x_range[1] - self.x_range[0]) * self.n))
        j = int(round((v - self.y_range[0]) / (self.y_range[1] - self.y_range[0]) * self.n))
        if not (0 <= i <= self.n and 0 <= j <= self.n):
            raise ValueError(f"({u}, {v}) is outside the grid")
        return i, j


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        shape = (self.grid.n + 1, self.grid.n + 1)
        if vals.shape != shape:
            raise ValueError(f"expected {shape} node values, got shape {vals.shape}")
        bad = ~np.isfinite(vals)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            node = self.grid.node(i, j)
            raise EvaluationError(f"non-finite value {vals[i, j]} at node {node}", node)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "GridFunction":
        return cls(grid, np.full((grid.n + 1, grid.n + 1), float(c)))

    @property
    def n(self) -> int:
        return self.grid.n

    def cell_values(self) -> np.ndarray:
        """``n x n`` array of corner means, one per cell."""
        return cell_average(self.values)

    def transpose(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.T)

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())

    def interpolate(self, x, y) -> np.ndarray:
        """Bilinear interpolation at arbitrary (broadcastable) points of the box."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n = self.grid.n
        (x0, x1), (y0, y1) = self.grid.x_range, self.grid.y_range
        sx = np.clip((x - x0) / (x1 - x0) * n, 0.0, n)
        sy = np.clip((y - y0) / (y1 - y0) * n, 0.0, n)
        i = np.minimum(np.floor(sx).astype(int), n - 1)
        j = np.minimum(np.floor(sy).astype(int), n - 1)
        wx = sx - i
        wy = sy - j
        V = self.values
        return ((1 - wx) * (1 - wy) * V[i, j] + wx * (1 - wy) * V[i + 1, j]
                + (1 - wx) * wy * V[i, j + 1] + wx * wy * V[i + 1, j + 1])

    # serialization: rows ordered by v, then u

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u", "v", "value"])
        u, v = self.grid.u, self.grid.v
        for j in range(self.n + 1):
            for i in range(self.n + 1):
                w.writerow([f"{u[i]:.17g}", f"{v[j]:.17g}", f"{self.values[i, j]:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["u", "v", "value"]:
            raise ValueError("grid CSV must start with the header 'u,v,value'")
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
        m = int(round(math.sqrt(len(data))))
        if m * m != len(data):
            raise ValueError(f"grid CSV has {len(data)} rows, not a square number")
        n = m - 1
        u = np.unique(data[:, 0])
        v = np.unique(data[:, 1])
        if len(u) != m or len(v) != m:
            raise ValueError("grid CSV coordinates do not form a full tensor grid")
        grid = Grid(n, (float(u[0]), float(u[-1])), (float(v[0]), float(v[-1])))
        vals = np.empty((m, m))
        i = np.searchsorted(u, data[:, 0])
        j = np.searchsorted(v, data[:, 1])
        vals[i, j] = data[:, 2]
        return cls(grid, vals)

    def to_dict(self) -> dict:
        out = {"n": self.n, "values": [float(x) for x in self.values.T.ravel()]}
        if not self.grid.is_unit:
            out["x_range"] = list(self.grid.x_range)
            out["y_range"] = list(self.grid.y_range)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "GridFunction":
        n = int(d["n"])
        grid = Grid(n, tuple(d.get("x_range", (0.0, 1.0))), tuple(d.get("y_range", (0.0, 1.0))))
        flat = np.asarray(d["values"], dtype=float)
        if flat.size != (n + 1) ** 2:
            raise ValueError(f"expected {(n + 1) ** 2} values for n={n}, got {flat.size}")
        return cls(grid, flat.reshape(n + 1, n + 1).T)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        return cls.from_dict(json.loads(text))


def cell_average(nodes: np.ndarray) -> np.ndarray:
    return 0.25 * (nodes[:-1, :-1] + nodes[1:, :-1] + nodes[:-1, 1:] + nodes[1:, 1:])


def integrate_l1(f: GridFunction) -> float:
    """Integral of ``|f|`` over the box, normalised to unit area."""
    return float(np.mean(cell_average(np.abs(f.values))))


def norm_lp(f: GridFunction, p=1.0) -> float:
    p = parse_p(p)
    if p == 1.0:
        return integrate_l1(f)
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max())
    return float(np.mean(cell_average(a ** p)) ** (1.0 / p))


def sample(evaluator: Evaluator, grid: Grid) -> GridFunction:
    """Evaluate ``evaluator(u, v)`` at every node of ``grid``.

    Failures are re-raised as :class:`EvaluationError` carrying the first
    offending node.
    """
    U, V = grid.mesh()
    try:
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(evaluator(U, V), dtype=float), U.shape)
    except Exception as exc:
        node = _first_failing_node(evaluator, grid)
        raise EvaluationError(f"evaluator failed at node {node}: {exc}", node) from exc
    return GridFunction(grid, vals)


def _first_failing_node(evaluator: Evaluator, grid: Grid):
    for i, u in enumerate(grid.u):
        for j, v in enumerate(grid.v):
            try:
                evaluator(np.float64(u), np.float64(v))
            except Exception:
                return grid.node(i, j)
    return None
