import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asymcop import families as fam
from asymcop.core import (CopulaSpec, MarginError, SubcopulaSpec, bracket, convex_combine,
                          pseudo_inverse, sklar_construct, sklar_extract, transpose,
                          verify_axioms)
from asymcop.grid import Grid, GridFunction

PI = fam.product()
M = fam.frechet_upper()
W = fam.frechet_lower()


def h(u, v):
    return np.sqrt(u) * v


def test_product_passes_all_axioms():
    report = verify_axioms(PI, Grid(64), 1e-12)
    assert report.passed
    assert report.failures() == []


def test_h_fails_margins_at_quarter():
    report = verify_axioms(CopulaSpec.from_function(h), Grid(64), 1e-9)
    assert not report.margins.passed
    assert report.margins.worst == pytest.approx(0.25, abs=1e-15)
    assert report.margins.witness == [0.25, 1.0]
    assert report.grounded.passed


def test_average_is_2_increasing_but_not_grounded():
    report = verify_axioms(CopulaSpec.from_function(lambda u, v: (u + v) / 2), Grid(16), 1e-12)
    assert report.two_increasing.passed
    assert abs(report.two_increasing.worst) <= 1e-15
    assert not report.grounded.passed
    assert report.grounded.worst == pytest.approx(0.5)


def test_report_detects_negative_volume():
    # 1 - C of a copula is decreasing, so cell volumes are negative
    report = verify_axioms(CopulaSpec.from_function(lambda u, v: u + v - u * v), Grid(8))
    assert not report.two_increasing.passed
    (u1, v1), (u2, v2) = report.two_increasing.witness
    assert u2 - u1 == pytest.approx(1 / 8) and v2 - v1 == pytest.approx(1 / 8)


def test_report_serializes():
    d = verify_axioms(PI, Grid(8)).to_dict()
    assert set(d) >= {"grounded", "margins", "two_increasing", "lipschitz", "fh_envelope"}
    assert d["margins"]["pass"] is True and "worst" in d["margins"] and "witness" in d["margins"]


def test_rectangle_additivity_consistent():
    report = verify_axioms(fam.clayton(2.0), Grid(64))
    assert report.additivity_error <= 1e-12


def test_tabulated_default_tolerance():
    table = PI.render(Grid(32))
    spec = CopulaSpec.from_table(table)
    assert spec.default_tol == 2 / 32
    assert PI.default_tol == 1e-9


# transpose ------------------------------------------------------------------


@pytest.mark.parametrize("spec", [PI, M])
def test_symmetric_transpose_renders_identically(spec):
    g = Grid(16)
    assert np.array_equal(transpose(spec).render(g).values, spec.render(g).values)


def test_transpose_value():
    t = transpose(CopulaSpec.from_function(h))
    assert float(t(0.25, 0.75)) == pytest.approx(math.sqrt(0.75) * 0.25, abs=1e-15)
    assert float(t(0.25, 0.75)) == pytest.approx(0.21651, abs=1e-5)


def test_double_transpose_is_bitwise_identity():
    c = fam.cobb_douglas_C(0.3).ae_part
    g = Grid(32)
    assert np.array_equal(transpose(transpose(c)).render(g).values, c.render(g).values)
    cc = convex_combine(fam.clayton(1.0), CopulaSpec.from_function(h), 0.4)
    assert np.array_equal(transpose(transpose(cc)).render(g).values, cc.render(g).values)


# bracket --------------------------------------------------------------------


def test_bracket_of_symmetric_is_zero():
    for spec in (PI, M, W, fam.clayton(2.0)):
        assert bracket(spec, Grid(32)).max() == 0.0


def test_bracket_value_cobb_douglas():
    g = Grid(4)
    b = bracket(fam.cobb_douglas_C(0.5), g)
    expected = (2 / 3) * abs(0.375 - math.sqrt(0.75) * 0.25)
    assert b.values[g.index_of(0.25, 0.75)] == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.10566, abs=1e-5)


def test_bracket_diagonal_zero_and_transpose_invariant():
    g = Grid(64)
    c = fam.cobb_douglas_C(0.7)
    b = bracket(c, g).values
    assert np.all(np.diag(b) == 0)
    assert np.array_equal(b, bracket(transpose(c), g).values)
    # copulas have zero bracket on the boundary
    cop = convex_combine(M, PI, 0.5)
    bc = bracket(cop, g).values
    assert bc[0].max() == bc[-1].max() == bc[:, 0].max() == bc[:, -1].max() == 0.0


# convex combination ----------------------------------------------------------


def test_convex_combination_examples():
    g = Grid(16)
    assert np.array_equal(convex_combine(PI, M, 1.0).render(g).values, PI.render(g).values)
    assert float(convex_combine(M, W, 0.5)(0.5, 0.5)) == 0.25
    assert np.array_equal(convex_combine(PI, PI, 0.5).render(g).values, PI.render(g).values)


@pytest.mark.parametrize("t", [-0.1, 1.5, math.nan])
def test_convex_combination_rejects_weight(t):
    with pytest.raises(ValueError):
        convex_combine(PI, M, t)


def test_convex_combination_with_subcopula_is_subcopula():
    s = convex_combine(fam.cobb_douglas_C(0.5), PI, 0.3)
    assert isinstance(s, SubcopulaSpec)
    assert s.null_part is not None


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.sampled_from(["product", "M", "W", "clayton:0.5", "gumbel:2"]),
       st.sampled_from(["product", "M", "W", "clayton:3", "gumbel:1.5"]))
def test_convexity_closure(t, a, b):
    mix = convex_combine(fam.parse_spec_ref(a), fam.parse_spec_ref(b), t)
    assert verify_axioms(mix, Grid(16), 1e-9, n_random_pairs=500).passed


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["product", "M", "W", "clayton:2", "gumbel:3"]))
def test_passing_specs_are_bounded_and_monotone(ref):
    spec = fam.parse_spec_ref(ref)
    C = spec.render(Grid(32)).values
    assert C.min() >= -1e-12 and C.max() <= 1 + 1e-12
    assert np.all(np.diff(C, axis=0) >= -1e-12) and np.all(np.diff(C, axis=1) >= -1e-12)


# Sklar ----------------------------------------------------------------------


def ident(x):
    return x


def square(x):
    return x ** 2


def test_sklar_construct_examples():
    g = Grid(8)
    H = sklar_construct(PI, ident, ident, g)
    U, V = g.mesh()
    assert np.array_equal(H.values, U * V)
    H = sklar_construct(M, ident, ident, g)
    assert np.array_equal(H.values, np.minimum(U, V))
    H = sklar_construct(PI, square, ident, g)
    assert H.values[g.index_of(0.5, 0.5)] == 0.125


def test_sklar_construct_on_box_keeps_margins():
    box = Grid(32, (-2.0, 3.0), (0.0, 10.0))
    F = lambda x: (x + 2) / 5  # noqa: E731
    G = lambda y: np.sqrt(y / 10)  # noqa: E731
    H = sklar_construct(fam.clayton(1.0), F, G, box)
    assert np.allclose(H.values[:, -1], F(box.u), atol=1e-12)
    assert np.allclose(H.values[-1, :], G(box.v), atol=1e-12)
    assert np.all(H.values[0, :] == 0) and np.all(H.values[:, 0] == 0)
    vol = H.values[1:, 1:] - H.values[1:, :-1] - H.values[:-1, 1:] + H.values[:-1, :-1]
    assert vol.min() >= -1e-12


def test_sklar_construct_rejects_bad_margins():
    with pytest.raises(MarginError):
        sklar_construct(PI, lambda x: 1 - x, ident, Grid(8))
    with pytest.raises(MarginError):
        sklar_construct(PI, lambda x: 0.5 * x, ident, Grid(8))


def test_sklar_extract_identity_margins_exact():
    g = Grid(16)
    U, V = g.mesh()
    c = sklar_extract(GridFunction(g, U * V), ident, ident)
    assert np.abs(c.render(g).values - U * V).max() <= 1e-12
    c = sklar_extract(GridFunction(g, np.minimum(U, V)), ident, ident)
    assert np.abs(c.render(g).values - np.minimum(U, V)).max() <= 1e-12


@pytest.mark.parametrize("n", [64, 256])
def test_sklar_roundtrip_clayton(n):
    g = Grid(n)
    H = sklar_construct(fam.clayton(1.0), square, ident, g)
    C = sklar_extract(H, square, ident).render(g).values
    U, V = g.mesh()
    assert np.abs(C - fam.clayton_closed_form(U, V, 1.0)).max() <= 2 / n


def test_sklar_extract_rejects_wide_plateau():
    def F(x):
        return np.clip(2 * x, 0, 1)  # flat on [0.5, 1]

    g = Grid(8)
    H = sklar_construct(PI, F, ident, g)
    with pytest.raises(MarginError):
        sklar_extract(H, F, ident)


def test_pseudo_inverse_one_cell_plateau_takes_left_end():
    xs = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    fs = np.array([0.0, 0.4, 0.4, 0.7, 1.0])
    assert pseudo_inverse(0.4, xs, fs) == 0.25
    assert pseudo_inverse(0.2, xs, fs) == pytest.approx(0.125)
    assert pseudo_inverse(0.0, xs, fs) == 0.0
    assert pseudo_inverse(1.0, xs, fs) == 1.0


def test_subcopula_domain_must_contain_endpoints():
    with pytest.raises(ValueError):
        SubcopulaSpec(PI, domain=((0.0, 0.5), (0.0, 1.0)))


def test_subcopula_ae_part_must_be_grounded():
    with pytest.raises(ValueError):
        SubcopulaSpec(CopulaSpec.from_function(lambda u, v: (u + v) / 2))


def test_spec_json_roundtrip():
    specs = [PI, fam.clayton(2.0), transpose(fam.cobb_douglas_C(0.3).ae_part),
             convex_combine(M, W, 0.25), fam.cobb_douglas_D(0.4),
             fam.make_archimedean(fam.Generator("gumbel", 1.5)),
             fam.make_generalized_archimedean(fam.Generator("clayton", 2.0),
                                              fam.Generator("clayton", 2.0, 0.25)),
             CopulaSpec.from_table(fam.clayton(1.0).render(Grid(8)))]
    g = Grid(16)
    for s in specs:
        back = fam.spec_from_dict(s.to_dict())
        assert np.array_equal(back.render(g).values, s.render(g).values), s.label


def test_function_spec_not_serializable():
    with pytest.raises(ValueError):
        CopulaSpec.from_function(h).to_dict()
