"""Analytic limit objects: compact measures, free convolutions, norm oracles."""

from .measures import (
    CompactMeasure,
    SupportSet,
    arcsine_measure,
    kesten_measure,
    measure_support,
    semicircle_measure,
    sup_cdf_distance,
    kolmogorov_distance,
    two_point_measure,
)
from .transforms import (
    cauchy_transform,
    free_add_convolve,
    free_compression,
    free_mult_convolve,
)
from .words import free_haar_trace
from .norms import (
    akemann_ostrand_norm,
    fell_norm,
    haagerup_bound,
    kemp_speicher_bound,
    kesten_norm,
    lehner_norm,
)

__all__ = [
    "CompactMeasure",
    "SupportSet",
    "arcsine_measure",
    "kesten_measure",
    "measure_support",
    "semicircle_measure",
    "sup_cdf_distance",
    "kolmogorov_distance",
    "two_point_measure",
    "cauchy_transform",
    "free_add_convolve",
    "free_compression",
    "free_mult_convolve",
    "free_haar_trace",
    "akemann_ostrand_norm",
    "fell_norm",
    "haagerup_bound",
    "kemp_speicher_bound",
    "kesten_norm",
    "lehner_norm",
]
