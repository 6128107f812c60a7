"""Command-line interface.

Exit codes: 0 success, 1 failed axiom check, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import asymmetry, core, cz, empirical, families
from .grid import Grid, GridFunction, is_power_of_two, parse_p

SCHEMA = 1


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: int
    tol: float | None
    p: float
    t: float
    fmt: str
    out: str | None
    seed: int

    def __post_init__(self):
        if not is_power_of_two(self.n) or not 4 <= self.n <= 4096:
            raise UsageError(f"-n must be a power of two between 4 and 4096, got {self.n}")
        if self.tol is not None and not self.tol > 0:
            raise UsageError(f"--tol must be positive, got {self.tol}")
        if not (self.t > 0 and math.isfinite(self.t)):
            raise UsageError(f"-t must be positive, got {self.t}")

    @property
    def grid(self) -> Grid:
        return Grid(self.n)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj: dict) -> str:
    return json.dumps({"schema": SCHEMA, **obj}, sort_keys=True, indent=2,
                      default=_json_default, allow_nan=False) + "\n"


def _text(obj, indent=0) -> str:
    pad = "  " * indent
    lines = []
    for k in sorted(obj):
        v = obj[k]
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.append(_text(v, indent + 1))
        elif isinstance(v, float):
            lines.append(f"{pad}{k}: {v:.10g}")
        else:
            lines.append(f"{pad}{k}: {v}")
    return "\n".join(lines)


def emit(cfg: RunConfig, obj: dict, csv_text: str | None = None):
    if cfg.fmt == "json":
        text = dumps(obj)
    elif cfg.fmt == "csv":
        if csv_text is None:
            raise UsageError(f"--format csv is not available for {cfg.command}")
        text = csv_text
    else:
        text = _text(obj) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# spec resolution

PARAM_FLAGS = ("theta", "alpha", "weight", "psi_scale")


def _resolve_spec(args) -> core.Spec:
    flagged = {k: getattr(args, k) for k in PARAM_FLAGS if getattr(args, k, None) is not None}
    ref = getattr(args, "spec", None)
    if args.family and ref:
        raise UsageError("give either a positional spec or --family, not both")
    if args.family:
        return families.make_family(args.family, **flagged)
    if ref:
        if flagged:
            raise UsageError("parameter flags only apply together with --family")
        return families.parse_spec_ref(ref)
    raise UsageError("no spec given; use --family NAME or a positional NAME[:params]")


def _grid_meta(cfg: RunConfig) -> dict:
    return {"n": cfg.n, "nodes": (cfg.n + 1) ** 2, "h": 1.0 / cfg.n}


def _p_out(p: float):
    return "inf" if math.isinf(p) else p


# ---------------------------------------------------------------------------
# commands


def cmd_check(args, cfg: RunConfig) -> int:
    spec = _resolve_spec(args)
    report = core.verify_axioms(spec, cfg.grid, cfg.tol, seed=cfg.seed)
    out = {"command": "check", "spec": spec.label, "grid": _grid_meta(cfg), "report": report.to_dict()}
    if isinstance(spec, core.SubcopulaSpec):
        out["note"] = "subcopula: a.e. part checked against copula axioms"
    emit(cfg, out)
    return 0 if report.passed else 1


def cmd_measure(args, cfg: RunConfig) -> int:
    spec = _resolve_spec(args)
    value = asymmetry.mu_p(spec, cfg.p, cfg.grid, t=cfg.t)
    emit(cfg, {"command": "measure", "spec": spec.label, "p": _p_out(cfg.p), "t": cfg.t,
               "mu_p": value, "grid": _grid_meta(cfg)})
    return 0


def cmd_compare(args, cfg: RunConfig) -> int:
    a = families.parse_spec_ref(args.first)
    b = families.parse_spec_ref(args.second)
    if args.transpose_first:
        a = core.transpose(a)
    if args.transpose_second:
        b = core.transpose(b)
    out = {"command": "compare", "mode": args.mode, "first": a.label, "second": b.label,
           "grid": _grid_meta(cfg)}
    if args.mode == "order":
        out["verdict"] = asymmetry.compare_order(a, b, cfg.grid, cfg.tol).to_dict()
    elif args.mode == "equiv":
        tol = cfg.tol if cfg.tol is not None else max(a.default_tol, b.default_tol)
        same, dev = asymmetry.equivalent(a, b, cfg.grid, tol)
        out["verdict"] = {"relation": "equivalent" if same else "not_equivalent",
                          "sup_deviation": dev, "tolerance": tol}
    else:
        if not cfg.t <= 1:
            raise UsageError(f"tolerance mode needs 0 < t <= 1, got {cfg.t}")
        out["verdict"] = cz.tolerance_compare(a, b, cfg.t, cfg.p, cfg.grid).to_dict()
    emit(cfg, out)
    return 0


def _load_grid_function(path: str) -> GridFunction:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        return GridFunction.from_json(text)
    return GridFunction.from_csv(text)


def cmd_cz(args, cfg: RunConfig) -> int:
    if args.input:
        f = _load_grid_function(args.input)
        source = args.input
    else:
        spec = _resolve_spec(args)
        f = core.bracket(spec, cfg.grid)
        source = f"bracket of {spec.label}"
    dec = cz.cz_decompose(f, cfg.t)
    if args.dump:
        Path(f"{args.dump}_g.csv").write_text(dec.good.to_csv(), encoding="utf-8")
        Path(f"{args.dump}_b.csv").write_text(dec.bad.to_csv(), encoding="utf-8")
    emit(cfg, {"command": "cz", "source": source, "decomposition": dec.to_dict()})
    return 0


def cmd_sweep(args, cfg: RunConfig) -> int:
    lo, hi = args.range
    if not lo < hi:
        raise UsageError(f"--range must satisfy a < b, got {lo} {hi}")
    fixed = {k: getattr(args, k) for k in PARAM_FLAGS
             if getattr(args, k, None) is not None and k != args.param}
    res = asymmetry.most_symmetric(args.family, (lo, hi), cfg.p, cfg.grid, param=args.param, fixed=fixed)
    if args.csv:
        Path(args.csv).write_text(res.to_csv(), encoding="utf-8")
    out = {"command": "sweep", "family": families.get_family(args.family).name,
           "p": _p_out(cfg.p), "range": [lo, hi], "grid": _grid_meta(cfg), **res.to_dict()}
    emit(cfg, out, res.to_csv())
    return 0


def cmd_empirical(args, cfg: RunConfig) -> int:
    sample = empirical.load_csv(args.path, args.x, args.y)
    spec = empirical.empirical_copula(sample, cfg.grid)
    report = core.verify_axioms(spec, cfg.grid, cfg.tol, seed=cfg.seed)
    if args.save_spec:
        Path(args.save_spec).write_text(json.dumps(spec.to_dict()), encoding="utf-8")
    emit(cfg, {"command": "empirical", "m": sample.m, "p": _p_out(cfg.p),
               "mu_p": asymmetry.mu_p(spec, cfg.p, cfg.grid), "grid": _grid_meta(cfg),
               "axioms": {c: getattr(report, c).passed for c in report.CHECKS}})
    return 0


def cobb_douglas_mu1(alpha: float) -> float:
    """Closed form of ``mu_1`` for the a.e. part of ``cobb_douglas_C(alpha)``."""
    return 2.0 * (1.0 - alpha) / (3.0 * (1.0 + alpha) * (3.0 + alpha))


def paper_example(alpha: float = 0.5, n: int = 1024, t: float = 0.5) -> dict:
    grid = Grid(n)
    C = families.cobb_douglas_C(alpha)
    D = families.cobb_douglas_D(alpha)
    K = families.product()
    classes = asymmetry.distinct_classes(
        [K, families.cobb_douglas_C(0.25), families.cobb_douglas_C(0.5)], grid, 1e-3)
    tv = cz.tolerance_compare(D, C, t, 1.0, grid)
    return {
        "command": "paper-example",
        "alpha": alpha,
        "grid": {"n": n, "nodes": (n + 1) ** 2, "h": 1.0 / n},
        "mu1_C": asymmetry.mu_p(C, 1, grid),
        "mu1_C_closed_form": cobb_douglas_mu1(alpha),
        "mu1_D": asymmetry.mu_p(D, 1, grid),
        "K_preceq_C": asymmetry.compare_order(K, C, grid, 1e-9).to_dict(),
        "K_preceq_D": asymmetry.compare_order(K, D, grid, 1e-9).to_dict(),
        "C_vs_D": asymmetry.compare_order(C, D, grid, 1e-9).to_dict(),
        "classes": classes.to_dict(),
        "tolerance_D_vs_C": tv.to_dict(),
        "D_null_bracket_at_half_third": D.null_part.bracket(0.5, 1.0 / 3.0),
        "D_null_bracket_formula": D.null_part.bracket_text,
    }


def cmd_paper_example(args, cfg: RunConfig) -> int:
    try:
        alpha = families.Param("alpha", 0.5, 0.0, 1.0, True, True).check("cobb_douglas", args.alpha)
    except families.ParameterError as exc:
        raise UsageError(str(exc)) from None
    emit(cfg, paper_example(alpha, cfg.n, cfg.t))
    return 0


# ---------------------------------------------------------------------------
# parser


def _p_arg(text: str) -> float:
    try:
        return parse_p(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-n", "--n", type=int, default=None, help="cells per axis (power of two)")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("-p", type=_p_arg, default=1.0, help="norm exponent, number or 'inf'")
    common.add_argument("-t", type=float, default=None, help="threshold / tolerance")
    common.add_argument("--format", choices=("json", "text", "csv"), default="json")
    common.add_argument("--out", default=None)
    common.add_argument("--seed", type=int, default=0)

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--family")
    params.add_argument("--theta", type=float)
    params.add_argument("--alpha", type=float)
    params.add_argument("--weight", type=float)
    params.add_argument("--psi-scale", dest="psi_scale", type=float)

    parser = argparse.ArgumentParser(prog="asymcop", description="Copula asymmetry toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, help_ in (("check", cmd_check, "verify copula axioms"),
                            ("measure", cmd_measure, "asymmetry measure mu_p")):
        sp = sub.add_parser(name, parents=[common, params], help=help_)
        sp.add_argument("spec", nargs="?")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("compare", parents=[common], help="compare two specs")
    sp.add_argument("--mode", choices=("order", "equiv", "tolerance"), default="order")
    sp.add_argument("first")
    sp.add_argument("second")
    sp.add_argument("--transpose-first", action="store_true")
    sp.add_argument("--transpose-second", action="store_true")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("cz", parents=[common, params], help="Calderon-Zygmund decomposition")
    sp.add_argument("spec", nargs="?")
    sp.add_argument("--input", help="grid function file (.csv or .json)")
    sp.add_argument("--dump", help="write PREFIX_g.csv and PREFIX_b.csv")
    sp.set_defaults(func=cmd_cz)

    sp = sub.add_parser("sweep", parents=[common, params], help="most symmetric parameter")
    sp.add_argument("--range", nargs=2, type=float, required=True, metavar=("A", "B"))
    sp.add_argument("--param", default=None, help="parameter to sweep (default: family's first)")
    sp.add_argument("--csv", default=None, help="also write the scan as CSV")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("empirical", parents=[common], help="empirical copula from CSV data")
    sp.add_argument("path")
    sp.add_argument("--x", default="0", help="x column (index or header name)")
    sp.add_argument("--y", default="1", help="y column (index or header name)")
    sp.add_argument("--save-spec", default=None)
    sp.set_defaults(func=cmd_empirical)

    sp = sub.add_parser("paper-example", parents=[common], help="Cobb-Douglas worked example")
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.set_defaults(func=cmd_paper_example)
    return parser


DEFAULT_N = {"paper-example": 1024, "empirical": 64}
DEFAULT_T = {"paper-example": 0.5}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code is None else int(exc.code)
    try:
        if args.command == "sweep" and not args.family:
            raise UsageError("sweep needs --family")
        n = args.n if args.n is not None else DEFAULT_N.get(args.command, 256)
        t = args.t if args.t is not None else DEFAULT_T.get(args.command, 1.0)
        cfg = RunConfig(args.command, n, args.tol, args.p, t, args.format, args.out, args.seed)
        return args.func(args, cfg)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"asymcop {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
