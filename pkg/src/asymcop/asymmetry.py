"""Asymmetry measures and the symmetry preorder on copulas.

``C1`` is more symmetric than ``C2`` when its bracket ``|C1 - C1^T|`` is
pointwise below the bracket of ``C2``. Two copulas are equivalent when their
brackets coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Spec, SubcopulaSpec, bracket
from .grid import Grid, norm_lp, parse_p

RELATIONS = ("first_more_symmetric", "second_more_symmetric", "equivalent", "incomparable")
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _ae_only(*specs: Spec) -> bool:
    return any(isinstance(s, SubcopulaSpec) and s.null_part is not None for s in specs)


def mu_p(c: Spec, p=1.0, grid: Grid | None = None, t: float = 1.0) -> float:
    """``L^p`` norm of the good part of the bracket of ``c`` at threshold ``t``.

    Subcopulas are measured on their a.e. part. When the bracket never
    exceeds ``t`` (always the case for copulas at ``t = 1``) the good part is
    the bracket itself.
    """
    p = parse_p(p)
    grid = grid or Grid(256)
    b = bracket(c, grid)
    if b.max() <= t:
        return norm_lp(b, p)
    from .cz import cz_decompose

    return cz_decompose(b, t).good_norm(p)


@dataclass(frozen=True)
class Witness:
    u: float
    v: float
    first: float
    second: float

    def to_dict(self) -> dict:
        return {"u": self.u, "v": self.v, "bracket_first": self.first, "bracket_second": self.second}


@dataclass(frozen=True)
class OrderVerdict:
    relation: str
    tolerance: float
    witnesses: tuple[Witness, ...] = ()
    sup_deviation: float = 0.0
    ae_only: bool = False

    def to_dict(self) -> dict:
        out = {"relation": self.relation, "tolerance": self.tolerance,
               "witnesses": [w.to_dict() for w in self.witnesses],
               "sup_deviation": self.sup_deviation}
        if self.ae_only:
            out["note"] = "verdict valid a.e. only"
        return out


def _witness(grid: Grid, b1: np.ndarray, b2: np.ndarray, flat_idx: int) -> Witness:
    i, j = np.unravel_index(flat_idx, b1.shape)
    return Witness(float(grid.u[i]), float(grid.v[j]), float(b1[i, j]), float(b2[i, j]))


def compare_order(c1: Spec, c2: Spec, grid: Grid | None = None, tol: float | None = None) -> OrderVerdict:
    grid = grid or Grid(256)
    if tol is None:
        tol = max(c1.default_tol, c2.default_tol)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    b1 = bracket(c1, grid).values
    b2 = bracket(c2, grid).values
    d = b1 - b2
    k_up = int(np.argmax(d))      # where c1 is most asymmetric relative to c2
    k_down = int(np.argmin(d))    # where c2 is most asymmetric relative to c1
    first_le = d.flat[k_up] <= tol
    second_le = -d.flat[k_down] <= tol
    sup = float(np.max(np.abs(d)))
    if first_le and second_le:
        relation, wit = "equivalent", ()
    elif first_le:
        relation, wit = "first_more_symmetric", (_witness(grid, b1, b2, k_down),)
    elif second_le:
        relation, wit = "second_more_symmetric", (_witness(grid, b1, b2, k_up),)
    else:
        relation = "incomparable"
        wit = (_witness(grid, b1, b2, k_up), _witness(grid, b1, b2, k_down))
    return OrderVerdict(relation, float(tol), wit, sup, _ae_only(c1, c2))


def equivalent(c1: Spec, c2: Spec, grid: Grid | None = None, tol: float | None = None) -> tuple[bool, float]:
    """Whether the brackets agree within ``tol`` in sup norm, and the deviation."""
    grid = grid or Grid(256)
    if tol is None:
        tol = max(c1.default_tol, c2.default_tol)
    dev = float(np.max(np.abs(bracket(c1, grid).values - bracket(c2, grid).values)))
    return dev <= tol, dev


@dataclass(frozen=True)
class Partition:
    classes: tuple[tuple[int, ...], ...]
    max_intra_deviation: float
    tolerance: float

    @property
    def count(self) -> int:
        return len(self.classes)

    @property
    def representatives(self) -> tuple[int, ...]:
        return tuple(c[0] for c in self.classes)

    def to_dict(self) -> dict:
        return {"count": self.count, "classes": [list(c) for c in self.classes],
                "representatives": list(self.representatives),
                "max_intra_deviation": self.max_intra_deviation, "tolerance": self.tolerance}


def distinct_classes(specs: Sequence[Spec], grid: Grid | None = None, tol: float | None = None) -> Partition:
    """Single-linkage partition of ``specs`` under tolerance equivalence.

    Tolerance equivalence is not transitive, so the largest pairwise bracket
    deviation inside any class is reported alongside.
    """
    if not specs:
        raise ValueError("need at least one spec")
    grid = grid or Grid(256)
    if tol is None:
        tol = max(s.default_tol for s in specs)
    brackets = [bracket(s, grid).values for s in specs]
    m = len(specs)
    dev = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            dev[a, b] = dev[b, a] = np.max(np.abs(brackets[a] - brackets[b]))

    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in range(m):
        for b in range(a + 1, m):
            if dev[a, b] <= tol:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for a in range(m):
        groups.setdefault(find(a), []).append(a)
    classes = tuple(tuple(g) for _, g in sorted(groups.items()))
    intra = max((dev[a, b] for g in classes for a in g for b in g), default=0.0)
    return Partition(classes, float(intra), float(tol))


# ---------------------------------------------------------------------------
# most symmetric member of a one-parameter family


@dataclass
class SweepResult:
    params: list[float]
    values: list[float]
    argmin: float
    value: float
    trace: list[tuple[float, float]] = field(default_factory=list)
    non_unimodal: bool = False
    evaluations: int = 0
    parameter: str = "param"

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def to_csv(self) -> str:
        lines = ["param,mu_p"]
        lines += [f"{a:.17g},{b:.17g}" for a, b in zip(self.params, self.values)]
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {"argmin": self.argmin, "value": self.value, "iterations": self.iterations,
                "non_unimodal": self.non_unimodal, "parameter": self.parameter,
                "evaluations": self.evaluations}

    def to_dict(self) -> dict:
        out = self.summary()
        out["scan"] = [{"param": a, "mu_p": b} for a, b in zip(self.params, self.values)]
        out["trace"] = [list(iv) for iv in self.trace]
        return out


def count_local_minima(values: Sequence[float], rtol: float = 1e-12) -> int:
    """Number of local minima of a sampled sequence, plateaus counted once."""
    vals = np.asarray(values, dtype=float)
    scale = max(1e-300, float(np.max(np.abs(vals))) if vals.size else 0.0)
    d = np.diff(vals)
    signs = [int(np.sign(x)) for x in d if abs(x) > rtol * scale]
    if not signs:
        return 1
    count = int(signs[0] > 0)
    count += sum(1 for a, b in zip(signs, signs[1:]) if a < 0 < b)
    count += int(signs[-1] < 0)
    return count


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float,
                   max_iter: int = 60) -> tuple[list[tuple[float, float]], list[tuple[float, float]]]:
    """Golden-section search on ``[lo, hi]``; returns (trace, evaluated points)."""
    trace = [(lo, hi)]
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    points = [(x1, f1), (x2, f2)]
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
            points.append((x1, f1))
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
            points.append((x2, f2))
        trace.append((lo, hi))
    return trace, points


def most_symmetric(family: str | Callable[[float], Spec], param_range: tuple[float, float],
                   p=1.0, grid: Grid | None = None, *, param: str | None = None,
                   fixed: dict | None = None, scan_points: int = 33,
                   rel_tol: float = 1e-6, max_iter: int = 60) -> SweepResult:
    """Scan ``mu_p`` over a parameter range and refine the minimum.

    If the scan shows more than one local minimum the global scan minimum is
    returned with ``non_unimodal`` set and no refinement is done.
    """
    a, b = (float(x) for x in param_range)
    if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
        raise ValueError(f"parameter range must satisfy a < b, got [{a}, {b}]")
    p = parse_p(p)
    grid = grid or Grid(256)
    make, pname = _family_maker(family, param, fixed or {}, (a, b))

    cache: dict[float, float] = {}

    def f(x: float) -> float:
        if x not in cache:
            cache[x] = mu_p(make(x), p, grid)
        return cache[x]

    if b - a <= 1e-9 * max(1.0, abs(a), abs(b)):
        v = f(a)
        return SweepResult([a], [v], a, v, evaluations=1, parameter=pname)

    xs = list(np.linspace(a, b, scan_points))
    xs[-1] = b
    ys = [f(x) for x in xs]
    k = int(np.argmin(ys))
    if count_local_minima(ys) > 1:
        return SweepResult(xs, ys, xs[k], ys[k], non_unimodal=True,
                           evaluations=len(cache), parameter=pname)
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]
    trace, points = golden_section(f, lo, hi, rel_tol * (b - a), max_iter)
    best_x, best_y = min(list(zip(xs, ys)) + points, key=lambda t: (t[1], t[0]))
    return SweepResult(xs, ys, best_x, best_y, trace, False, len(cache), pname)


def _family_maker(family, param, fixed, bounds):
    if callable(family):
        return family, param or "param"
    from .families import get_family

    desc = get_family(family)
    pdesc = desc.param(param) if param else desc.primary
    if pdesc is None:
        raise ValueError(f"family {desc.name} has no parameter to sweep")
    for x in bounds:
        pdesc.check(desc.name, x)

    def make(x):
        return desc.make(**{**fixed, pdesc.name: x})

    return make, pdesc.name
