"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import itertools
import math
import time

import numpy as np
import pytest

from asymcop import families as fam
from asymcop.asymmetry import compare_order, distinct_classes, mu_p
from asymcop.cli import main
from asymcop.core import convex_combine, sklar_construct, sklar_extract, transpose, verify_axioms
from asymcop.cz import cz_decompose, tolerance_compare
from asymcop.empirical import SampleSet, empirical_copula
from asymcop.grid import Grid, GridFunction, integrate_l1

from oracles import cone_field, rough_field

BASE = {
    "product": fam.product(),
    "M": fam.frechet_upper(),
    "W": fam.frechet_lower(),
    "clayton(0.5)": fam.clayton(0.5),
    "clayton(1)": fam.clayton(1.0),
    "clayton(2)": fam.clayton(2.0),
    "gumbel(1)": fam.gumbel(1.0),
    "gumbel(2)": fam.gumbel(2.0),
}


def _mixtures(count=10, seed=7):
    rng = np.random.default_rng(seed)
    names = list(BASE)
    out = {}
    for _ in range(count):
        a, b = rng.choice(len(names), 2, replace=False)
        w = float(rng.random())
        out[f"{w:.3f}*{names[a]}+{1 - w:.3f}*{names[b]}"] = convex_combine(BASE[names[a]], BASE[names[b]], w)
    return out


ALL_SPECS = {**BASE, **_mixtures()}


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {k}: {detail}")
        assert ok, detail
    return emit


def test_criterion_01_axiom_suite(report):
    start = time.perf_counter()
    failures = []
    for n in (16, 64, 256):
        for name, spec in ALL_SPECS.items():
            r = verify_axioms(spec, Grid(n), 1e-9)
            if not r.passed:
                failures.append((name, n, r.failures()))
    elapsed = time.perf_counter() - start
    report(1, not failures and elapsed <= 30,
           f"{len(ALL_SPECS)} specs x 3 grids, failures={failures}, {elapsed:.1f}s (limit 30s)")


def test_criterion_02_frechet_envelope(report):
    g = Grid(256)
    U, V = g.mesh()
    lower, upper = np.maximum(U + V - 1, 0), np.minimum(U, V)
    violations = 0
    for spec in ALL_SPECS.values():
        C = spec.render(g).values
        violations += int(np.count_nonzero(C < lower) + np.count_nonzero(C > upper))
    report(2, violations == 0, f"W <= C <= M at n=256, violations={violations}")


def test_criterion_03_lipschitz(report):
    g = Grid(256)
    worst = 0.0
    for spec in ALL_SPECS.values():
        C = spec.render(g).values
        h = 1 / 256
        # independent neighbour check; the verifier adds 10^4 seeded random pairs
        worst = max(worst, float(np.abs(np.diff(C, axis=0)).max() - h),
                    float(np.abs(np.diff(C, axis=1)).max() - h))
        r = verify_axioms(spec, g, 1e-12, seed=0, n_random_pairs=10_000)
        worst = max(worst, r.lipschitz.worst)
    report(3, worst <= 1e-12, f"max Lipschitz excess {worst:.3e} (limit 1e-12)")


def test_criterion_04_archimedean_symmetry(report):
    g = Grid(256)
    specs = [fam.clayton(t) for t in (0.5, 1, 2, 5)] + [fam.gumbel(t) for t in (1, 1.5, 2, 4)]
    specs += [fam.generalized_clayton(t, s) for t in (0.5, 1, 3) for s in (0.25, 0.5, 1.0)]
    specs += [fam.make_archimedean(lambda t: -np.log(t)), fam.make_archimedean(lambda t: (1 - t) ** 2)]
    worst = max(mu_p(s, math.inf, g) for s in specs)
    report(4, worst < 1e-12, f"max mu_inf over {len(specs)} instances = {worst:.3e}")


def test_criterion_05_cobb_douglas(report):
    g = Grid(1024)
    C, D = fam.cobb_douglas_C(0.5), fam.cobb_douglas_D(0.5)
    m1 = mu_p(C, 1, g)
    mD = mu_p(D, 1, g)
    v = tolerance_compare(D, C, 0.5, 1, Grid(256)).to_dict()
    ok = abs(m1 - 4 / 63) <= 5e-4 and mD == 0.0 and v["relation"] == "first_more_symmetric_t" \
        and "paper_orientation" in v
    report(5, ok, f"mu1(C)={m1:.7f} vs 4/63={4 / 63:.7f}, mu1(D)={mD}, D vs C: {v['relation']}, "
                  f"paper_orientation={v.get('paper_orientation')}")


def test_criterion_06_order_laws(report):
    g = Grid(256)
    got = []
    for (kn, K), a in itertools.product([("product", BASE["product"]), ("M", BASE["M"]),
                                         ("W", BASE["W"])], (0.25, 0.5)):
        got.append((kn, a, compare_order(K, fam.cobb_douglas_C(a), g).relation))
    trans = [compare_order(fam.cobb_douglas_C(a), transpose(fam.cobb_douglas_C(a)), g).relation
             for a in (0.25, 0.5)]
    ok = all(r == "first_more_symmetric" for *_, r in got) and all(r == "equivalent" for r in trans)
    report(6, ok, f"K vs C: {sorted({r for *_, r in got})}, C vs C^T: {trans}")


def test_criterion_07_three_classes(report):
    part = distinct_classes([fam.product(), fam.cobb_douglas_C(0.25), fam.cobb_douglas_C(0.5)],
                            Grid(256), 1e-3)
    report(7, part.count == 3, f"classes={part.classes}")


def test_criterion_08_cz_bounds(report):
    start = time.perf_counter()
    n = 128
    grid = Grid(n)
    problems = []
    count = 0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        lipschitz = seed % 2 == 0
        for t in (0.1, 0.3, 1.0):
            vals = cone_field(rng, n, t) if lipschitz else rough_field(rng, n, t)
            f = GridFunction(grid, vals)
            d = cz_decompose(f, t)
            l1 = integrate_l1(f)
            count += 1
            checks = {
                "reconstruction": np.abs(d.good.values + d.bad.values - vals).max() <= 1e-12,
                "bad_mean": not d.squares or np.abs(d.bad_square_means()).max() <= 1e-10,
                "area": d.area_union <= l1 / t,
                "bad_l1": d.l1_bad <= 2 * l1,
                "inside_4t": d.good.values.max() <= 4 * t,
                "outside_cells": not (~d.selected).any() or d.good_cells[~d.selected].max() <= t,
                "outside_nodes": not lipschitz or d.sup_g_outside <= t + 4 / n,
            }
            problems += [(seed, t, k) for k, ok in checks.items() if not ok]
    elapsed = time.perf_counter() - start
    report(8, not problems and elapsed <= 60,
           f"{count} decompositions, violations={problems[:5]}, {elapsed:.1f}s (limit 60s)")


def test_criterion_09_cz_hand_case(report):
    g = Grid(128)
    U, V = g.mesh()
    d = cz_decompose(GridFunction(g, 4.0 * ((U <= 0.5) & (V <= 0.5))), 2.0)
    sq = [(q.level, q.i, q.j, q.avg) for q in d.squares]
    ok = sq == [(1, 0, 0, 4.0)] and np.all(d.bad.values == 0) and d.area_union == 0.25
    report(9, ok, f"squares={sq}, max|b|={np.abs(d.bad.values).max()}, area={d.area_union}")


def test_criterion_10_sklar_roundtrip(report):
    errs = {}
    for n in (64, 256):
        g = Grid(n)
        H = sklar_construct(fam.clayton(1.0), lambda x: x ** 2, lambda y: y, g)
        C = sklar_extract(H, lambda x: x ** 2, lambda y: y).render(g).values
        U, V = g.mesh()
        errs[n] = float(np.abs(C - fam.clayton_closed_form(U, V, 1.0)).max())
    ok = all(errs[n] <= 2 / n for n in errs) and errs[256] <= errs[64] / 3.5
    report(10, ok, f"sup errors {errs}, ratio {errs[256] / errs[64]:.4f} (limit {1 / 3.5:.4f})")


def test_criterion_11_empirical(report):
    g = Grid(64)
    i = np.arange(1.0, 201.0)
    C = empirical_copula(SampleSet(i, i), g).render(g).values
    U, V = g.mesh()
    dev = float(np.abs(C - np.minimum(U, V)).max())
    rng = np.random.default_rng(3)
    x = rng.normal(size=400)
    y = np.exp(x) + rng.normal(size=400)
    s = SampleSet(x, y)
    swap_ok = np.array_equal(empirical_copula(s.swapped(), g).render(g).values,
                             transpose(empirical_copula(s, g)).render(g).values)
    report(11, dev <= 2 / 64 + 1 / 200 and swap_ok,
           f"sup |C_m - M| = {dev:.5f} (limit {2 / 64 + 1 / 200:.5f}), swap == transpose: {swap_ok}")


def test_criterion_12_determinism(report, capsys):
    outputs = []
    for _ in range(2):
        code = main(["paper-example", "--format", "json"])
        outputs.append((code, capsys.readouterr().out.encode("utf-8")))
    ok = outputs[0][0] == outputs[1][0] == 0 and outputs[0][1] == outputs[1][1]
    report(12, ok, f"two runs, {len(outputs[0][1])} bytes each, identical={outputs[0][1] == outputs[1][1]}")
