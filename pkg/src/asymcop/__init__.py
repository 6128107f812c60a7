"""Numerical copulas on the unit square and measures of their asymmetry."""

from .asymmetry import (OrderVerdict, Partition, SweepResult, compare_order, distinct_classes,
                        equivalent, most_symmetric, mu_p)
from .core import (AxiomReport, CopulaSpec, NullPart, SubcopulaSpec, bracket, convex_combine,
                   sklar_construct, sklar_extract, transpose, verify_axioms)
from .cz import CzDecomposition, DyadicSquare, cz_decompose, tolerance_compare
from .empirical import SampleSet, empirical_copula, load_csv
from .families import (Generator, get_family, make_archimedean, make_family,
                       make_generalized_archimedean, parse_spec_ref)
from .grid import Grid, GridFunction, integrate_l1, norm_lp, sample

__version__ = "0.1.0"

__all__ = [
    "AxiomReport",
    "CopulaSpec",
    "CzDecomposition",
    "DyadicSquare",
    "Generator",
    "Grid",
    "GridFunction",
    "NullPart",
    "OrderVerdict",
    "Partition",
    "SampleSet",
    "SubcopulaSpec",
    "SweepResult",
    "bracket",
    "compare_order",
    "convex_combine",
    "cz_decompose",
    "distinct_classes",
    "empirical_copula",
    "equivalent",
    "get_family",
    "integrate_l1",
    "load_csv",
    "make_archimedean",
    "make_family",
    "make_generalized_archimedean",
    "most_symmetric",
    "mu_p",
    "norm_lp",
    "parse_spec_ref",
    "sample",
    "sklar_construct",
    "sklar_extract",
    "tolerance_compare",
    "transpose",
    "verify_axioms",
]
