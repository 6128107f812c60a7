"""Built-in copula and subcopula families, addressable by name."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .core import (CopulaSpec, NullPart, Spec, SubcopulaSpec, convex_combine,
                   transpose)
from .grid import GridFunction

TWO_THIRDS = 2.0 / 3.0
INVERSE_TOL = 1e-13
INVERSE_MAX_ITER = 200


class ParameterError(ValueError):
    """Unknown family or out-of-range family parameter."""


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class Generator:
    """Archimedean generator ``phi``, optionally scaled by a constant.

    ``name`` is ``"clayton"`` or ``"gumbel"`` for the built-in closed forms;
    anything else must supply ``func``.
    """

    name: str
    theta: float = 1.0
    scale: float = 1.0
    func: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.func is None:
            if self.name == "clayton" and not self.theta > 0:
                raise ParameterError(f"clayton generator needs theta > 0, got {self.theta}")
            if self.name == "gumbel" and not self.theta >= 1:
                raise ParameterError(f"gumbel generator needs theta >= 1, got {self.theta}")
            if self.name not in ("clayton", "gumbel"):
                raise ParameterError(f"unknown generator {self.name!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.func is not None:
                out = self.func(t)
            elif self.name == "clayton":
                out = (np.power(t, -self.theta) - 1.0) / self.theta
            else:
                out = np.power(-np.log(t), self.theta)
        return self.scale * out

    def scaled(self, factor: float) -> "Generator":
        return Generator(self.name, self.theta, self.scale * factor, self.func)

    def to_dict(self) -> dict:
        if self.func is not None:
            raise ValueError(f"custom generator {self.name!r} cannot be serialized")
        return {"name": self.name, "theta": self.theta, "scale": self.scale}

    @classmethod
    def from_dict(cls, d: dict) -> "Generator":
        return cls(d["name"], float(d.get("theta", 1.0)), float(d.get("scale", 1.0)))


def generalized_inverse(phi: Callable, s, tol: float = INVERSE_TOL,
                        max_iter: int = INVERSE_MAX_ITER) -> np.ndarray:
    """``inf{t in [0, 1] : phi(t) <= s}`` by vectorised bisection."""
    s = np.asarray(s, dtype=float)
    lo = np.zeros(s.shape)
    hi = np.ones(s.shape)
    for _ in range(max_iter):
        if s.size == 0 or np.max(hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        ok = phi(mid) <= s
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    out = 0.5 * (lo + hi)
    return np.where(s >= phi(0.0), 0.0, out)


_PROBE = np.arange(1, 65) / 64.0


def _check_generator(phi: Callable, name: str, strict: bool = False):
    vals = np.asarray(phi(_PROBE), dtype=float)
    if abs(float(phi(1.0))) > 1e-12:
        raise ParameterError(f"generator {name} must vanish at 1, got {float(phi(1.0))}")
    scale = np.maximum(1.0, np.abs(vals[:-1]))
    d = np.diff(vals)
    if strict and np.any(d >= 0):
        raise ParameterError(f"generator {name} must be strictly decreasing")
    if np.any(d > 1e-12 * scale):
        raise ParameterError(f"generator {name} must be decreasing")
    return vals


def _envelope(u, v, c):
    # the exact value lies in [W, M]; clamping removes bisection round-off
    return np.clip(c, np.maximum(u + v - 1.0, 0.0), np.minimum(u, v))


def make_archimedean(phi: Generator | Callable, theta: float | None = None) -> CopulaSpec:
    """Archimedean copula ``phi^[-1](phi(u) + phi(v))``.

    ``phi`` is a :class:`Generator`, a built-in generator name (with
    ``theta``), or a plain callable.
    """
    if isinstance(phi, str):
        phi = Generator(phi, 1.0 if theta is None else float(theta))
    elif not isinstance(phi, Generator):
        phi = Generator(getattr(phi, "__name__", "custom"), func=phi)
    vals = _check_generator(phi, phi.name)
    second = vals[2:] - 2 * vals[1:-1] + vals[:-2]
    if np.any(second < -1e-9 * np.maximum(1.0, np.abs(vals[1:-1]))):
        raise ParameterError(f"generator {phi.name} must be convex")

    def func(u, v):
        return _envelope(u, v, generalized_inverse(phi, phi(u) + phi(v)))

    return CopulaSpec("generator", func, family="archimedean", params={"phi": phi})


def make_generalized_archimedean(phi: Generator | Callable, psi: Generator | Callable) -> CopulaSpec:
    """``phi^[-1](phi(max(u, v)) + psi(min(u, v)))``; symmetric by construction.

    The admissibility checks do not make the result a copula: with
    ``psi = phi / 2`` the value can exceed ``min(u, v)``.
    """
    phi = phi if isinstance(phi, Generator) else Generator("phi", func=phi)
    psi = psi if isinstance(psi, Generator) else Generator("psi", func=psi)
    phi_vals = _check_generator(phi, "phi", strict=True)
    psi_vals = np.asarray(psi(_PROBE), dtype=float)
    if np.any(np.diff(psi_vals) > 1e-12 * np.maximum(1.0, np.abs(psi_vals[:-1]))):
        raise ParameterError("cogenerator psi must be decreasing")
    gap = psi_vals - phi_vals
    if np.any(np.diff(gap) < -1e-9 * np.maximum(1.0, np.abs(phi_vals[:-1]))):
        raise ParameterError("psi - phi must be increasing")

    def func(u, v):
        return generalized_inverse(phi, phi(np.maximum(u, v)) + psi(np.minimum(u, v)))

    return CopulaSpec("generator", func, family="generalized_archimedean",
                      params={"phi": phi, "psi": psi})


# ---------------------------------------------------------------------------
# closed forms


def product() -> CopulaSpec:
    return CopulaSpec("family", lambda u, v: u * v, family="product")


def frechet_upper() -> CopulaSpec:
    return CopulaSpec("family", np.minimum, family="frechet_upper_M")


def frechet_lower() -> CopulaSpec:
    return CopulaSpec("family", lambda u, v: np.maximum(u + v - 1.0, 0.0), family="frechet_lower_W")


def clayton_closed_form(u, v, theta: float):
    """Clayton copula, used to cross-check the generator pipeline."""
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.power(u, -theta) + np.power(v, -theta) - 1.0
        out = np.power(s, -1.0 / theta)
    return np.where((np.asarray(u) == 0) | (np.asarray(v) == 0), 0.0, out)


def gumbel_closed_form(u, v, theta: float):
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.power(-np.log(u), theta) + np.power(-np.log(v), theta)
        return np.exp(-np.power(s, 1.0 / theta))


def clayton(theta: float = 1.0) -> CopulaSpec:
    return _tag(make_archimedean(Generator("clayton", float(theta))), "archimedean_clayton", theta=theta)


def gumbel(theta: float = 2.0) -> CopulaSpec:
    return _tag(make_archimedean(Generator("gumbel", float(theta))), "archimedean_gumbel", theta=theta)


def generalized_clayton(theta: float = 1.0, psi_scale: float = 0.5) -> CopulaSpec:
    """Generalized Archimedean copula with ``phi`` Clayton and ``psi = psi_scale * phi``."""
    phi = Generator("clayton", float(theta))
    spec = make_generalized_archimedean(phi, phi.scaled(psi_scale))
    return _tag(spec, "generalized_archimedean", theta=theta, psi_scale=psi_scale)


def _tag(spec: CopulaSpec, family: str, **params) -> CopulaSpec:
    return CopulaSpec("family", spec.func, family=family,
                      params={k: float(v) for k, v in params.items()})


def cobb_douglas_utility(x, y, alpha: float):
    """``U(X, Y) = X^alpha Y^(1 - alpha)``."""
    return np.power(x, alpha) * np.power(y, 1.0 - alpha)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"cobb_douglas alpha must satisfy 0 < alpha < 1, got {alpha}")
    return alpha


def cobb_douglas_C(alpha: float = 0.5) -> SubcopulaSpec:
    """Cobb-Douglas subcopula ``(2/3) u^alpha v`` off the rational grid.

    On rational pairs ``(q_n, q_m)`` it equals ``(1/3) q_n q_m``; that branch
    is null and only kept symbolically.
    """
    alpha = _check_alpha(alpha)
    ae = CopulaSpec("family", lambda u, v: TWO_THIRDS * (np.power(u, alpha) * v),
                    family="cobb_douglas_C_ae", params={"alpha": alpha})
    null = NullPart("(1/3)*q_n*q_m on rational pairs (q_n, q_m)",
                    lambda q1, q2: q1 * q2 / 3.0,
                    "|(1/3) q_n q_m - (1/3) q_m q_n| = 0")
    return SubcopulaSpec(ae, null, family="cobb_douglas_C", params={"alpha": alpha})


def cobb_douglas_D(alpha: float = 0.5) -> SubcopulaSpec:
    """Subcopula ``(2/3) u v`` a.e., ``(1/3) q_n^alpha q_m`` on rational pairs."""
    alpha = _check_alpha(alpha)
    ae = CopulaSpec("family", lambda u, v: TWO_THIRDS * (u * v), family="cobb_douglas_D_ae",
                    params={"alpha": alpha})
    null = NullPart(f"(1/3)*q_n^{alpha:g}*q_m on rational pairs (q_n, q_m)",
                    lambda q1, q2: q1 ** alpha * q2 / 3.0,
                    "D_s(q_n, q_m) = |(1/3) q_n^alpha q_m - (1/3) q_n q_m^alpha|")
    return SubcopulaSpec(ae, null, family="cobb_douglas_D", params={"alpha": alpha})


def cobb_douglas_mixture(weight: float = 0.5, alpha: float = 0.5) -> SubcopulaSpec:
    """``weight * cobb_douglas_C(alpha) + (1 - weight) * product``."""
    spec = convex_combine(cobb_douglas_C(alpha), product(), weight)
    return SubcopulaSpec(spec.ae_part, spec.null_part, family="mixture",
                         params={"weight": float(weight), "alpha": float(alpha)})


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Param:
    name: str
    default: float
    lo: float = -math.inf
    hi: float = math.inf
    lo_open: bool = False
    hi_open: bool = False

    def check(self, family: str, value) -> float:
        try:
            x = float(value)
        except (TypeError, ValueError):
            raise ParameterError(f"{family}: {self.name} must be a number, got {value!r}") from None
        ok = (x > self.lo if self.lo_open else x >= self.lo) and \
             (x < self.hi if self.hi_open else x <= self.hi)
        if not ok or math.isnan(x):
            raise ParameterError(f"{family}: {self.name}={x:g} out of range; valid range {self.range_text()}")
        return x

    def range_text(self) -> str:
        left = "(" if self.lo_open or math.isinf(self.lo) else "["
        right = ")" if self.hi_open or math.isinf(self.hi) else "]"
        return f"{self.name} in {left}{self.lo:g}, {self.hi:g}{right}"


@dataclass(frozen=True)
class FamilyDescriptor:
    name: str
    factory: Callable[..., Spec]
    params: tuple[Param, ...] = ()
    aliases: tuple[str, ...] = ()
    symmetric: bool = False

    @property
    def primary(self) -> Param | None:
        return self.params[0] if self.params else None

    def param(self, name: str) -> Param:
        for p in self.params:
            if p.name == name:
                return p
        raise ParameterError(f"{self.name} has no parameter {name!r}; "
                             f"parameters: {', '.join(p.name for p in self.params) or 'none'}")

    def make(self, **params) -> Spec:
        unknown = set(params) - {p.name for p in self.params}
        if unknown:
            raise ParameterError(f"{self.name} does not take {', '.join(sorted(unknown))}; "
                                 f"valid: {', '.join(p.range_text() for p in self.params) or 'no parameters'}")
        kw = {p.name: p.check(self.name, params.get(p.name, p.default)) for p in self.params}
        return self.factory(**kw)


_ALPHA = Param("alpha", 0.5, 0.0, 1.0, lo_open=True, hi_open=True)

FAMILIES: dict[str, FamilyDescriptor] = {d.name: d for d in (
    FamilyDescriptor("product", product, aliases=("pi", "independence"), symmetric=True),
    FamilyDescriptor("frechet_upper_M", frechet_upper, aliases=("M", "upper", "min"), symmetric=True),
    FamilyDescriptor("frechet_lower_W", frechet_lower, aliases=("W", "lower"), symmetric=True),
    FamilyDescriptor("archimedean_clayton", clayton,
                     (Param("theta", 1.0, 0.0, math.inf, lo_open=True),),
                     aliases=("clayton",), symmetric=True),
    FamilyDescriptor("archimedean_gumbel", gumbel, (Param("theta", 2.0, 1.0, math.inf),),
                     aliases=("gumbel",), symmetric=True),
    FamilyDescriptor("generalized_archimedean", generalized_clayton,
                     (Param("theta", 1.0, 0.0, math.inf, lo_open=True),
                      Param("psi_scale", 0.5, 0.0, 1.0, lo_open=True)),
                     aliases=("generalized",), symmetric=True),
    FamilyDescriptor("cobb_douglas_C", cobb_douglas_C, (_ALPHA,), aliases=("cdC",)),
    FamilyDescriptor("cobb_douglas_D", cobb_douglas_D, (_ALPHA,), aliases=("cdD",)),
    FamilyDescriptor("mixture", cobb_douglas_mixture,
                     (Param("weight", 0.5, 0.0, 1.0), _ALPHA)),
)}

_LOOKUP = {}
for _d in FAMILIES.values():
    _LOOKUP[_d.name.lower()] = _d
    for _a in _d.aliases:
        _LOOKUP[_a.lower()] = _d


def get_family(name: str) -> FamilyDescriptor:
    try:
        return _LOOKUP[name.lower()]
    except KeyError:
        raise ParameterError(f"unknown family {name!r}; known: {', '.join(FAMILIES)}") from None


def make_family(name: str, **params) -> Spec:
    return get_family(name).make(**params)


def parse_spec_ref(ref: str) -> Spec:
    """Resolve ``name``, ``name:v1,v2``, ``name:key=value`` or ``@file.json``."""
    ref = ref.strip()
    if ref.startswith("@"):
        return spec_from_dict(json.loads(Path(ref[1:]).read_text()))
    name, _, argtext = ref.partition(":")
    fam = get_family(name)
    params = {}
    if argtext:
        for pos, item in enumerate(argtext.split(",")):
            key, eq, val = item.partition("=")
            if eq:
                params[key.strip()] = val
            elif pos < len(fam.params):
                params[fam.params[pos].name] = key
            else:
                raise ParameterError(f"{fam.name} takes at most {len(fam.params)} parameters")
    return fam.make(**params)


def spec_from_dict(d: dict) -> Spec:
    kind = d.get("kind")
    if kind == "family" and str(d.get("family", "")).endswith("_ae"):
        return make_family(d["family"][:-3], **d.get("params", {})).ae_part
    if kind in ("family", "subcopula") and "family" in d:
        return make_family(d["family"], **d.get("params", {}))
    if kind == "generator":
        params = d["params"]
        if d.get("family") == "generalized_archimedean":
            return make_generalized_archimedean(Generator.from_dict(params["phi"]),
                                                Generator.from_dict(params["psi"]))
        return make_archimedean(Generator.from_dict(params["phi"]))
    if kind == "table":
        return CopulaSpec.from_table(GridFunction.from_dict(d["table"]), d.get("family") or "table")
    if kind == "transpose":
        return transpose(spec_from_dict(d["of"]))
    if kind == "mixture":
        a, b = (spec_from_dict(p) for p in d["parts"])
        return convex_combine(a, b, d["params"]["weight"])
    raise ValueError(f"cannot deserialize spec of kind {kind!r}")
