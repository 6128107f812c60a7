"""Copula and subcopula representations and the operations on them.

A :class:`CopulaSpec` wraps a vectorised evaluator ``C(u, v)`` together with
enough metadata to serialize it. Tabulated specs interpolate bilinearly
between the nodes of their table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Union

import numpy as np

from .grid import Evaluator, Grid, GridFunction, sample

FORMULA_TOL = 1e-9
MONOTONE_TOL = 1e-12


class MarginError(ValueError):
    """Sampled margin is not a valid distribution function on the box."""


@dataclass(frozen=True, eq=False)
class CopulaSpec:
    kind: str  # family | generator | function | table | transpose | mixture
    func: Evaluator = field(repr=False)
    family: str | None = None
    params: Mapping[str, Any] = field(default_factory=dict)
    table: GridFunction | None = field(default=None, repr=False)
    parts: tuple = field(default=(), repr=False)

    def __call__(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self.func(u, v)

    @property
    def formula_backed(self) -> bool:
        if self.kind == "table":
            return False
        return all(p.formula_backed for p in self.parts)

    @property
    def default_tol(self) -> float:
        return FORMULA_TOL if self.formula_backed else 2.0 / self._table_n()

    def _table_n(self) -> int:
        if self.table is not None:
            return self.table.n
        return min(p._table_n() for p in self.parts if not p.formula_backed)

    def render(self, grid: Grid) -> GridFunction:
        if self.table is not None and self.table.grid == grid:
            return self.table
        return sample(self, grid)

    @property
    def label(self) -> str:
        if self.kind == "transpose":
            return f"transpose({self.parts[0].label})"
        if self.kind == "mixture":
            a, b = self.parts
            return f"mixture({self.params['weight']:g}; {a.label}, {b.label})"
        if self.params and all(isinstance(x, (int, float)) for x in self.params.values()):
            args = ",".join(f"{k}={v:g}" for k, v in self.params.items())
            return f"{self.family}({args})"
        return self.family or self.kind

    @classmethod
    def from_function(cls, func: Evaluator, name: str = "function") -> "CopulaSpec":
        return cls("function", func, family=name)

    @classmethod
    def from_table(cls, table: GridFunction, name: str = "table") -> "CopulaSpec":
        if not table.grid.is_unit:
            raise ValueError("copula tables must live on the unit square")
        return cls("table", table.interpolate, family=name, table=table)

    def to_dict(self) -> dict:
        if self.kind in ("family", "generator"):
            return {"kind": self.kind, "family": self.family, "params": _jsonable(self.params)}
        if self.kind == "table":
            return {"kind": "table", "family": self.family, "params": {},
                    "table": self.table.to_dict()}
        if self.kind == "transpose":
            return {"kind": "transpose", "of": self.parts[0].to_dict()}
        if self.kind == "mixture":
            return {"kind": "mixture", "params": {"weight": self.params["weight"]},
                    "parts": [p.to_dict() for p in self.parts]}
        raise ValueError(f"spec {self.label!r} wraps a bare Python callable and cannot be serialized")


@dataclass(frozen=True)
class NullPart:
    """Component of a subcopula living on a Lebesgue-null set.

    It is never sampled or integrated; ``value`` and ``bracket`` are kept for
    diagnostics at explicit points.
    """

    descriptor: str
    value: Callable[[float, float], float] = field(repr=False)
    bracket_text: str = ""

    def bracket(self, q1: float, q2: float) -> float:
        return abs(self.value(q1, q2) - self.value(q2, q1))


@dataclass(frozen=True, eq=False)
class SubcopulaSpec:
    ae_part: CopulaSpec
    null_part: NullPart | None = None
    domain: tuple = ((0.0, 1.0), (0.0, 1.0))
    family: str | None = None
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for k, s in enumerate(self.domain, start=1):
            if 0.0 not in s or 1.0 not in s:
                raise ValueError(f"domain S{k} must contain 0 and 1")
        report = verify_axioms(self.ae_part, Grid(16), seed=0, n_random_pairs=0)
        if not (report.grounded.passed and report.two_increasing.passed):
            raise ValueError("a.e. part of a subcopula must be grounded and 2-increasing")

    def __call__(self, u, v):
        return self.ae_part(u, v)

    @property
    def formula_backed(self) -> bool:
        return self.ae_part.formula_backed

    @property
    def default_tol(self) -> float:
        return self.ae_part.default_tol

    @property
    def label(self) -> str:
        if self.family and self.params:
            args = ",".join(f"{k}={v:g}" for k, v in self.params.items())
            return f"{self.family}({args})"
        return f"subcopula[{self.ae_part.label}]"

    def render(self, grid: Grid) -> GridFunction:
        return self.ae_part.render(grid)

    def to_dict(self) -> dict:
        if self.family is not None:
            return {"kind": "subcopula", "family": self.family, "params": _jsonable(self.params)}
        return {"kind": "subcopula", "ae_part": self.ae_part.to_dict(),
                "null_part": None if self.null_part is None else self.null_part.descriptor}


Spec = Union[CopulaSpec, SubcopulaSpec]


def _jsonable(params: Mapping[str, Any]) -> dict:
    out = {}
    for k, v in params.items():
        if hasattr(v, "to_dict"):
            v = v.to_dict()
        elif isinstance(v, (np.floating, np.integer)):
            v = v.item()
        out[k] = v
    return out


# ---------------------------------------------------------------------------
# axiom verification


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    worst: float
    witness: Any = None

    def to_dict(self) -> dict:
        return {"pass": self.passed, "worst": float(self.worst), "witness": self.witness}


@dataclass(frozen=True)
class AxiomReport:
    n: int
    tol: float
    grounded: CheckResult
    margins: CheckResult
    two_increasing: CheckResult
    lipschitz: CheckResult
    fh_envelope: CheckResult
    additivity_error: float = 0.0

    CHECKS = ("grounded", "margins", "two_increasing", "lipschitz", "fh_envelope")

    @property
    def passed(self) -> bool:
        return all(getattr(self, c).passed for c in self.CHECKS)

    def failures(self) -> list[str]:
        return [c for c in self.CHECKS if not getattr(self, c).passed]

    def to_dict(self) -> dict:
        out = {c: getattr(self, c).to_dict() for c in self.CHECKS}
        out.update(n=self.n, tol=self.tol, passed=self.passed,
                   additivity_error=float(self.additivity_error))
        return out


def _pt(grid: Grid, i, j) -> list[float]:
    return [float(grid.u[i]), float(grid.v[j])]


def verify_axioms(c: Spec, grid: Grid, tol: float | None = None, *,
                  seed: int = 0, n_random_pairs: int = 10_000,
                  n_random_rects: int = 200) -> AxiomReport:
    """Check grounding, uniform margins, 2-increasingness, the Lipschitz
    bound and the Frechet-Hoeffding envelope at the nodes of ``grid``.

    Failures are recorded in the report, never raised.
    """
    if tol is None:
        tol = c.default_tol
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not grid.is_unit:
        raise ValueError("axioms are checked on the unit square")
    C = c.render(grid).values
    u, v = grid.u, grid.v
    n = grid.n

    # grounded: C(0, v) = C(u, 0) = 0
    edge = np.concatenate([np.abs(C[0, :]), np.abs(C[:, 0])])
    k = int(np.argmax(edge))
    w = [0.0, float(v[k])] if k <= n else [float(u[k - n - 1]), 0.0]
    grounded = CheckResult(bool(edge[k] <= tol), float(edge[k]), w)

    # margins: C(1, v) = v and C(u, 1) = u
    dev = np.concatenate([np.abs(C[n, :] - v), np.abs(C[:, n] - u)])
    k = int(np.argmax(dev))
    w = [1.0, float(v[k])] if k <= n else [float(u[k - n - 1]), 1.0]
    margins = CheckResult(bool(dev[k] <= tol), float(dev[k]), w)

    # 2-increasing on every cell; larger rectangles are sums of cells
    vol = C[1:, 1:] - C[1:, :-1] - C[:-1, 1:] + C[:-1, :-1]
    i, j = np.unravel_index(int(np.argmin(vol)), vol.shape)
    two_inc = CheckResult(bool(vol[i, j] >= -tol), float(vol[i, j]),
                          [_pt(grid, i, j), _pt(grid, i + 1, j + 1)])
    additivity = _rectangle_additivity(C, vol, np.random.default_rng(seed), n_random_rects)

    # Lipschitz: |dC| <= |du| + |dv| on neighbours plus random pairs
    du = np.abs(C[1:, :] - C[:-1, :]) - np.diff(u)[:, None]
    dv = np.abs(C[:, 1:] - C[:, :-1]) - np.diff(v)[None, :]
    cand = []
    a, b = np.unravel_index(int(np.argmax(du)), du.shape)
    cand.append((float(du[a, b]), [_pt(grid, a, b), _pt(grid, a + 1, b)]))
    a, b = np.unravel_index(int(np.argmax(dv)), dv.shape)
    cand.append((float(dv[a, b]), [_pt(grid, a, b), _pt(grid, a, b + 1)]))
    if n_random_pairs:
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, n + 1, size=(4, n_random_pairs))
        i1, j1, i2, j2 = idx
        ex = np.abs(C[i2, j2] - C[i1, j1]) - np.abs(u[i2] - u[i1]) - np.abs(v[j2] - v[j1])
        k = int(np.argmax(ex))
        cand.append((float(ex[k]), [_pt(grid, i1[k], j1[k]), _pt(grid, i2[k], j2[k])]))
    worst, w = max(cand, key=lambda x: x[0])
    lipschitz = CheckResult(bool(worst <= tol), worst, w)

    # W <= C <= M
    U, V = grid.mesh()
    lower = np.maximum(U + V - 1.0, 0.0)
    upper = np.minimum(U, V)
    viol = np.maximum(lower - C, C - upper)
    i, j = np.unravel_index(int(np.argmax(viol)), viol.shape)
    envelope = CheckResult(bool(viol[i, j] <= tol), float(max(viol[i, j], 0.0)), _pt(grid, i, j))

    return AxiomReport(n, float(tol), grounded, margins, two_inc, lipschitz, envelope, additivity)


def _rectangle_additivity(C, vol, rng, count) -> float:
    """Largest gap between a random rectangle's volume and its summed cells."""
    if count == 0:
        return 0.0
    n = vol.shape[0]
    S = np.zeros((n + 1, n + 1))
    S[1:, 1:] = vol.cumsum(0).cumsum(1)
    a = np.sort(rng.integers(0, n + 1, size=(2, count)), axis=0)
    b = np.sort(rng.integers(0, n + 1, size=(2, count)), axis=0)
    i1, i2 = a
    j1, j2 = b
    direct = C[i2, j2] - C[i2, j1] - C[i1, j2] + C[i1, j1]
    summed = S[i2, j2] - S[i2, j1] - S[i1, j2] + S[i1, j1]
    return float(np.max(np.abs(direct - summed)))


# ---------------------------------------------------------------------------
# algebra


def transpose(c: Spec) -> Spec:
    if isinstance(c, SubcopulaSpec):
        null = c.null_part
        if null is not None:
            f = null.value
            null = NullPart(f"transpose of [{null.descriptor}]", lambda a, b: f(b, a), null.bracket_text)
        return SubcopulaSpec(transpose(c.ae_part), null, tuple(reversed(c.domain)))
    if c.kind == "transpose":
        return c.parts[0]
    return CopulaSpec("transpose", lambda u, v: c(v, u), family=c.family, parts=(c,))


def bracket(c: Spec, grid: Grid) -> GridFunction:
    """Node-wise ``|C(u, v) - C(v, u)|``."""
    if not grid.is_unit:
        raise ValueError("brackets are defined on the unit square")
    C = c.render(grid).values
    return GridFunction(grid, np.abs(C - C.T))


def convex_combine(c1: Spec, c2: Spec, t: float) -> Spec:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {t}")
    if isinstance(c1, SubcopulaSpec) or isinstance(c2, SubcopulaSpec):
        a1 = c1.ae_part if isinstance(c1, SubcopulaSpec) else c1
        a2 = c2.ae_part if isinstance(c2, SubcopulaSpec) else c2
        notes = [f"{w:g} x [{s.null_part.descriptor}]"
                 for w, s in ((t, c1), (1 - t, c2))
                 if isinstance(s, SubcopulaSpec) and s.null_part is not None and w > 0]
        null = None
        if notes:
            null = NullPart(" + ".join(notes), lambda a, b: float("nan"))
        return SubcopulaSpec(convex_combine(a1, a2, t), null)
    return CopulaSpec("mixture", lambda u, v: t * c1(u, v) + (1.0 - t) * c2(u, v),
                      family="mixture", params={"weight": t}, parts=(c1, c2))


# ---------------------------------------------------------------------------
# Sklar construction and extraction


def _margin_samples(F, xs: np.ndarray, name: str) -> np.ndarray:
    with np.errstate(all="ignore"):
        fx = np.broadcast_to(np.asarray(F(xs), dtype=float), xs.shape).copy()
    if not np.all(np.isfinite(fx)):
        raise MarginError(f"margin {name} is not finite on the box")
    drops = np.diff(fx)
    if np.any(drops < -MONOTONE_TOL):
        k = int(np.argmin(drops))
        raise MarginError(f"margin {name} decreases between x={xs[k]:g} and x={xs[k + 1]:g}")
    if abs(fx[0]) > MONOTONE_TOL or abs(fx[-1] - 1.0) > MONOTONE_TOL:
        raise MarginError(f"margin {name} must run from 0 to 1 on the box, got {fx[0]:g}..{fx[-1]:g}")
    return np.clip(fx, 0.0, 1.0)


def sklar_construct(c: Spec, F, G, grid: Grid) -> GridFunction:
    """Tabulate ``H(x, y) = C(F(x), G(y))`` on ``grid`` (any box)."""
    fx = _margin_samples(F, grid.u, "F")
    gy = _margin_samples(G, grid.v, "G")
    return GridFunction(grid, np.broadcast_to(c(fx[:, None], gy[None, :]), (grid.n + 1,) * 2))


def pseudo_inverse(levels, xs: np.ndarray, fs: np.ndarray) -> np.ndarray:
    """Generalised inverse of the piecewise-linear margin through ``(xs, fs)``.

    On a flat step the left endpoint is returned.
    """
    levels = np.asarray(levels, dtype=float)
    i = np.clip(np.searchsorted(fs, levels, side="left"), 1, len(fs) - 1)
    f0, f1 = fs[i - 1], fs[i]
    x0, x1 = xs[i - 1], xs[i]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(f1 > f0, np.clip((levels - f0) / (f1 - f0), 0.0, 1.0), 1.0)
    return x0 + w * (x1 - x0)


def _check_strict(fs: np.ndarray, name: str):
    flat = np.diff(fs) <= MONOTONE_TOL
    if np.any(flat[1:] & flat[:-1]):
        raise MarginError(f"margin {name} has a plateau wider than one cell; the copula is not unique")


def sklar_extract(H: GridFunction, F, G, grid: Grid | None = None) -> CopulaSpec:
    """Recover the copula of ``H`` as a table: ``C(u, v) = H(F^-1(u), G^-1(v))``."""
    fx = _margin_samples(F, H.grid.u, "F")
    gy = _margin_samples(G, H.grid.v, "G")
    _check_strict(fx, "F")
    _check_strict(gy, "G")
    grid = grid or Grid(H.grid.n)
    xq = pseudo_inverse(grid.u, H.grid.u, fx)
    yq = pseudo_inverse(grid.v, H.grid.v, gy)
    table = GridFunction(grid, H.interpolate(xq[:, None], yq[None, :]))
    return CopulaSpec.from_table(table, "sklar_extract")
