"""Invariant idempotent measures of max-plus IFSs on finite metric spaces."""

from .semiring import NEG_INF, big_oplus, odot, oplus
from .spaces import FiniteMetricSpace, ProductSpace, build_grid, hausdorff, product
from .measures import (
    IdempotentMeasure,
    TestFunction,
    dirac,
    integrate,
    normalize,
    pushforward,
    read_density_file,
    support,
    uniform,
    weighted_oplus,
    write_density_file,
)
from .ifs import (
    CertificateError,
    ComparisonFunction,
    ContractionMap,
    MaxPlusIFS,
    attractor,
    iterate_fixed_point,
    markov,
    markov_dual,
    product_ifs,
    snap_affine,
)
from .metrics import (
    ContractionReport,
    Coupling,
    SeriesParams,
    SeriesValue,
    coupling_distance,
    coupling_distance_bruteforce,
    coupling_distance_levelsets,
    coupling_feasible,
    empirical_contraction,
    harmonic_series_distance,
    lipschitz_distance,
    lipschitz_distance_certificates,
    maximal_coupling,
    series_distance,
)
from .rng import Lcg64, random_measure, random_test_function

__version__ = "0.1.0"

__all__ = [
    "NEG_INF",
    "oplus",
    "odot",
    "big_oplus",
    "FiniteMetricSpace",
    "ProductSpace",
    "build_grid",
    "product",
    "hausdorff",
    "IdempotentMeasure",
    "TestFunction",
    "normalize",
    "dirac",
    "uniform",
    "integrate",
    "support",
    "pushforward",
    "weighted_oplus",
    "write_density_file",
    "read_density_file",
    "CertificateError",
    "ComparisonFunction",
    "ContractionMap",
    "MaxPlusIFS",
    "snap_affine",
    "markov",
    "markov_dual",
    "iterate_fixed_point",
    "product_ifs",
    "attractor",
    "Coupling",
    "SeriesParams",
    "SeriesValue",
    "maximal_coupling",
    "coupling_feasible",
    "coupling_distance",
    "coupling_distance_levelsets",
    "coupling_distance_bruteforce",
    "lipschitz_distance",
    "lipschitz_distance_certificates",
    "series_distance",
    "harmonic_series_distance",
    "empirical_contraction",
    "ContractionReport",
    "Lcg64",
    "random_measure",
    "random_test_function",
]
