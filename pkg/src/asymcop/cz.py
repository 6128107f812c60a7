"""Dyadic Calderon-Zygmund decomposition of nonnegative grid functions.

The stopping-time recursion works on cell values (corner means). Starting at
the whole square, a dyadic square whose mean exceeds ``t`` is selected and
not subdivided further; otherwise its four children are examined, down to
single cells.

On a selected square the good part is the square mean and the bad part is
the deviation from it; elsewhere ``g = f`` and ``b = 0``. A node touching a
selected square takes the largest adjacent square mean as its good value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Spec, bracket
from .grid import Grid, GridFunction, cell_average, integrate_l1, parse_p

TIE_TOL = 1e-9
# the 1-D lemma bounds selected means by 2t; dyadic squares in 2-D give 4t
ONE_D_GOOD_CONSTANT = 2.0
DYADIC_GOOD_CONSTANT = 4.0


@dataclass(frozen=True, order=True)
class DyadicSquare:
    level: int
    i: int
    j: int
    avg: float = field(compare=False)

    @property
    def area(self) -> float:
        return 4.0 ** -self.level

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    def bounds(self) -> tuple[tuple[float, float], tuple[float, float]]:
        s = self.side
        return (self.i * s, (self.i + 1) * s), (self.j * s, (self.j + 1) * s)

    def cell_slice(self, n: int) -> tuple[slice, slice]:
        w = n >> self.level
        return slice(self.i * w, (self.i + 1) * w), slice(self.j * w, (self.j + 1) * w)

    def to_dict(self) -> dict:
        return {"level": self.level, "i": self.i, "j": self.j, "avg": self.avg}


@dataclass(frozen=True, eq=False)
class CzDecomposition:
    threshold: float
    squares: tuple[DyadicSquare, ...]
    f: GridFunction = field(repr=False)
    good: GridFunction = field(repr=False)
    bad: GridFunction = field(repr=False)
    good_cells: np.ndarray = field(repr=False)
    bad_cells: np.ndarray = field(repr=False)
    selected: np.ndarray = field(repr=False)  # n x n cell mask
    input_l1: float = 0.0

    @property
    def area_union(self) -> float:
        return float(sum(q.area for q in self.squares))

    @property
    def l1_bad(self) -> float:
        return float(np.mean(np.abs(self.bad_cells)))

    @property
    def l1_good(self) -> float:
        return self.good_norm(1)

    @property
    def sup_g_inside(self) -> float:
        return max((q.avg for q in self.squares), default=0.0)

    @property
    def outside_nodes(self) -> np.ndarray:
        """Mask of nodes not touching any selected square."""
        return _node_neighbour_max(np.where(self.selected, 0.0, -np.inf)) == -np.inf

    @property
    def sup_g_outside(self) -> float:
        mask = self.outside_nodes
        return float(self.f.values[mask].max()) if mask.any() else 0.0

    def good_norm(self, p=1.0) -> float:
        """``||g||_p``; reduces to ``norm_lp(f, p)`` when nothing is selected."""
        p = parse_p(p)
        if math.isinf(p):
            return float(np.abs(self.good.values).max())
        off = cell_average(np.abs(self.f.values) ** p)
        cells = np.where(self.selected, np.abs(self.good_cells) ** p, off)
        return float(np.mean(cells) ** (1.0 / p))

    def bad_square_means(self) -> np.ndarray:
        n = self.f.n
        return np.array([self.bad_cells[q.cell_slice(n)].mean() for q in self.squares])

    def to_dict(self) -> dict:
        return {
            "t": self.threshold,
            "squares": [q.to_dict() for q in self.squares],
            "l1_f": self.input_l1,
            "l1_g": self.l1_good,
            "l1_b": self.l1_bad,
            "area_union": self.area_union,
            "sup_g_inside": self.sup_g_inside,
            "sup_g_outside": self.sup_g_outside,
            "good_bound_dyadic": DYADIC_GOOD_CONSTANT * self.threshold,
            "good_bound_1d": ONE_D_GOOD_CONSTANT * self.threshold,
            "n": self.f.n,
        }


def _node_neighbour_max(cells: np.ndarray) -> np.ndarray:
    n = cells.shape[0]
    A = np.full((n + 2, n + 2), -np.inf)
    A[1:-1, 1:-1] = cells
    return np.maximum(np.maximum(A[:-1, :-1], A[1:, :-1]), np.maximum(A[:-1, 1:], A[1:, 1:]))


def cz_decompose(f: GridFunction, t: float) -> CzDecomposition:
    t = float(t)
    if not t > 0 or not math.isfinite(t):
        raise ValueError(f"threshold t must be positive, got {t}")
    if not f.grid.is_unit:
        raise ValueError("decomposition is defined on the unit square")
    if np.any(f.values < 0):
        i, j = np.argwhere(f.values < 0)[0]
        raise ValueError(f"input must be nonnegative; f{f.grid.node(i, j)} = {f.values[i, j]}")
    n, k = f.n, f.grid.level
    cells = f.cell_values()

    pyramid = [cells]
    for _ in range(k):
        c = pyramid[-1]
        pyramid.append(0.25 * (c[0::2, 0::2] + c[1::2, 0::2] + c[0::2, 1::2] + c[1::2, 1::2]))
    pyramid.reverse()

    squares = []
    selected = np.zeros((n, n), dtype=bool)
    square_avg = np.zeros((n, n))
    active = np.ones((1, 1), dtype=bool)
    for level, means in enumerate(pyramid):
        sel = active & (means > t)
        if sel.any():
            squares += [DyadicSquare(level, int(i), int(j), float(means[i, j]))
                        for i, j in np.argwhere(sel)]
            w = n >> level
            sel_up = np.repeat(np.repeat(sel, w, 0), w, 1)
            selected |= sel_up
            square_avg = np.where(sel_up, np.repeat(np.repeat(means, w, 0), w, 1), square_avg)
        if level < k:
            active = np.repeat(np.repeat(active & ~sel, 2, 0), 2, 1)

    good_cells = np.where(selected, square_avg, cells)
    bad_cells = cells - good_cells
    nbr = _node_neighbour_max(np.where(selected, square_avg, -np.inf))
    g_nodes = np.where(np.isfinite(nbr), nbr, f.values)
    good = GridFunction(f.grid, g_nodes)
    bad = GridFunction(f.grid, f.values - g_nodes)
    return CzDecomposition(t, tuple(sorted(squares)), f, good, bad, good_cells, bad_cells,
                           selected, integrate_l1(f))


# ---------------------------------------------------------------------------
# tolerance order


@dataclass(frozen=True)
class ToleranceVerdict:
    relation: str
    paper_orientation: str
    t: float
    p: float
    good_norms: tuple[float, float]
    bad_l1: tuple[float, float]

    def to_dict(self) -> dict:
        return {"relation": self.relation, "paper_orientation": self.paper_orientation,
                "t": self.t, "p": self.p, "good_norm_first": self.good_norms[0],
                "good_norm_second": self.good_norms[1], "bad_l1_first": self.bad_l1[0],
                "bad_l1_second": self.bad_l1[1]}


def tolerance_compare(c1: Spec, c2: Spec, t: float, p=1.0, grid: Grid | None = None) -> ToleranceVerdict:
    """Compare good-part norms of the two brackets at threshold ``t``.

    ``relation`` calls the spec with the smaller norm more symmetric.
    ``paper_orientation`` applies the literal rule ``C2 <_t C1 iff
    ||g1|| >= ||g2||``, under which the larger norm is the more symmetric.
    """
    t = float(t)
    if not 0 < t <= 1:
        raise ValueError(f"tolerance t must lie in (0, 1], got {t}")
    p = parse_p(p)
    grid = grid or Grid(256)
    d1 = cz_decompose(bracket(c1, grid), t)
    d2 = cz_decompose(bracket(c2, grid), t)
    g1, g2 = d1.good_norm(p), d2.good_norm(p)
    if abs(g1 - g2) <= TIE_TOL:
        relation = literal = "tied"
    elif g1 < g2:
        relation, literal = "first_more_symmetric_t", "second_more_symmetric_t"
    else:
        relation, literal = "second_more_symmetric_t", "first_more_symmetric_t"
    return ToleranceVerdict(relation, literal, t, p, (g1, g2), (d1.l1_bad, d2.l1_bad))
